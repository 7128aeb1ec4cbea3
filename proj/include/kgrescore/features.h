// kgrescore/features.h

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

#ifndef KGRESCORE_FEATURES_H_
#define KGRESCORE_FEATURES_H_

// Feature n-grams over words and entity non-terminals.
//
// Concrete syntax: whitespace separated tokens.  A non-terminal is written
//   <TYPE[;pop=head|torso|tail][;wc>=1|2|3][;rel=RELATION@k]>
// where underscores in TYPE and RELATION stand for spaces in the knowledge
// graph ("<music_title>" is type "music title") and k is the 1-based index of
// an earlier non-terminal in the same n-gram.  "<s>" and "</s>" are boundary
// words, not non-terminals.

#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgrescore/common.h"
#include "kgrescore/kg.h"

namespace kgr {

using Token = std::variant<std::string, NonTerminalSpec>;

inline bool IsNonTerminal(const Token &t) {
  return std::holds_alternative<NonTerminalSpec>(t);
}

struct FeatureNGram {
  int id = 0;  // 1..F; 0 is the base-score feature
  std::vector<Token> tokens;
  Weight weight = 0;
};

struct Template {
  std::vector<Token> tokens;
  double frequency = 1.0;
};

struct Model {
  Weight base_weight = 1.0;  // w_0
  std::vector<FeatureNGram> features;

  /// Throws unless ids are unique and dense 1..F in order.
  void Validate() const;
  Weight FeatureWeight(int id) const { return features.at(id - 1).weight; }
};

std::string NonTerminalText(const NonTerminalSpec &spec);
NonTerminalSpec ParseNonTerminal(std::string_view text);

/// Parses a token sequence and checks that every relation condition refers
/// to an earlier non-terminal.
std::vector<Token> ParseTokens(std::string_view text);
std::string TokensText(const std::vector<Token> &tokens);
int CountNonTerminals(const std::vector<Token> &tokens);

/// Parses a feature body; it must contain at least one non-terminal.
FeatureNGram ParseFeature(std::string_view text);
inline std::string FeatureText(const FeatureNGram &f) {
  return TokensText(f.tokens);
}

struct ExtractOptions {
  /// Emit relation-conditioned variants of windows that contain both ends of
  /// a template relation.  Unconditioned variants are always emitted.
  bool relations = true;
};

/// 3-grams with at least one non-terminal and 4-grams that start and end
/// with a non-terminal, over `<s> template </s>`; duplicates merged, ids
/// dense in first-occurrence order, weights 0.
std::vector<FeatureNGram> ExtractFeatures(const std::vector<Template> &templates,
                                          const ExtractOptions &options = {});

enum class FactorMode { kNone, kWordCount, kPopularity, kBoth };
FactorMode ParseFactorMode(std::string_view name);

/// Replaces each feature with its conditional variants: word count >= 1/2/3
/// (kWordCount), head/torso/tail (kPopularity), or the union of both.
std::vector<FeatureNGram> FactorFeatures(const std::vector<FeatureNGram> &features,
                                         FactorMode mode);

// File formats.
//   features:  id<TAB>feature-text<TAB>weight
//   templates: template-text<TAB>frequency
//   model:     0<TAB><base><TAB>w0, then feature lines; without the base
//              line (a bare feature file) w0 is 1
std::vector<FeatureNGram> ReadFeatures(std::istream &is);
void WriteFeatures(const std::vector<FeatureNGram> &features, std::ostream &os);
std::vector<Template> ReadTemplates(std::istream &is);
Model ReadModel(std::istream &is);
void WriteModel(const Model &model, std::ostream &os);

std::vector<FeatureNGram> LoadFeatures(const std::string &path);
std::vector<Template> LoadTemplates(const std::string &path);
Model LoadModel(const std::string &path);

}  // namespace kgr

#endif  // KGRESCORE_FEATURES_H_
