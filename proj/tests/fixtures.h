// tests/fixtures.h

// Copyright 2026  kgrescore authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef KGRESCORE_TESTS_FIXTURES_H_
#define KGRESCORE_TESTS_FIXTURES_H_

// Hand-built fixtures shared by the unit tests and the acceptance binary.

#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kgrescore/features.h"
#include "kgrescore/fst.h"
#include "kgrescore/kg.h"
#include "kgrescore/symbol_table.h"
#include "kgrescore/trainer.h"

namespace kgr::fixture {

/// play {canyon | can you} moon by harry {styles | stiles}.  The "can you"
/// branch is 0.5 better on base score and "stiles" costs 0.3.
inline Wfst CorrectionLattice(SymbolTable *syms) {
  Wfst lat;
  for (int i = 0; i < 8; ++i) lat.AddState();
  lat.SetStart(0);
  lat.SetFinal(7, 0);
  auto arc = [&](StateId a, const char *w, Weight weight, StateId b) {
    Label l = syms->AddSymbol(w);
    lat.AddArc(a, Arc{l, l, weight, b});
  };
  arc(0, "play", -1.0, 1);
  arc(1, "canyon", -3.0, 3);
  arc(1, "can", -1.5, 2);
  arc(2, "you", -1.0, 3);
  arc(3, "moon", -1.0, 4);
  arc(4, "by", -0.5, 5);
  arc(5, "harry", -1.0, 6);
  arc(6, "styles", -3.5, 7);
  arc(6, "stiles", -3.8, 7);
  return lat;
}

/// Title and title-by-artist relation features.
inline Model CorrectionModel() {
  Model m;
  const std::pair<const char *, Weight> feats[] = {
      {"play <music_title> by", 1.2},
      {"<music_title> by <music_artist;rel=performed@1>", 1.0}};
  int id = 0;
  for (auto [text, w] : feats) {
    FeatureNGram f = ParseFeature(text);
    f.id = ++id;
    f.weight = w;
    m.features.push_back(f);
  }
  return m;
}

/// Ten n-best lists in which the base score always prefers a wrong entry and
/// the reference carries the word "good".
inline std::vector<TrainingExample> SeparableExamples() {
  std::vector<TrainingExample> out;
  const char *heads[] = {"call", "play", "set", "turn", "open",
                         "show", "find", "read", "send", "stop"};
  for (int i = 0; i < 10; ++i) {
    const std::string h = heads[i];
    TrainingExample ex;
    ex.utt_id = "sep-" + std::to_string(i);
    ex.reference = SplitWords(h + " it good");
    const double gap = 0.2 + 0.1 * i;
    ex.nbest = {{SplitWords(h + " it bad"), -1.0},
                {SplitWords(h + " it"), -1.0 - gap / 2},
                {ex.reference, -1.0 - gap},
                {SplitWords(h + " bad good"), -1.0 - 2 * gap}};
    out.push_back(std::move(ex));
  }
  return out;
}

/// Types good and bad, one entity each, named after the type.
inline KnowledgeGraph SeparableGraph() {
  std::istringstream is(R"({
    "g": {"names": {"good": {"word count": 1}}, "types": {"good": {"popularity": 0.5}}},
    "b": {"names": {"bad": {"word count": 1}}, "types": {"bad": {"popularity": 0.5}}}})");
  return ReadKnowledgeGraph(is);
}

inline std::vector<FeatureNGram> SeparableFeatures() {
  std::vector<FeatureNGram> out;
  int id = 0;
  for (const char *text : {"<good>", "<bad>", "it <good>", "it <bad> </s>"}) {
    FeatureNGram f = ParseFeature(text);
    f.id = ++id;
    out.push_back(f);
  }
  return out;
}

}  // namespace kgr::fixture

#endif  // KGRESCORE_TESTS_FIXTURES_H_
