// tests/rescorer_test.cc

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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "fixtures.h"
#include "kgrescore/rescorer.h"
#include "oracle.h"

namespace kgr {
namespace {

// One entity of type t per word.
KnowledgeGraph WordGraph(const std::vector<std::string> &words) {
  std::string json = "{";
  for (size_t i = 0; i < words.size(); ++i)
    json += (i ? "," : "") + std::string("\"e") + std::to_string(i) +
            "\": {\"names\": {\"" + words[i] +
            "\": {\"word count\": 1}}, \"types\": {\"t\": {\"popularity\": 0.5}}}";
  json += "}";
  std::istringstream is(json);
  return ReadKnowledgeGraph(is);
}

KnowledgeGraph ExampleGraph() {
  return LoadKnowledgeGraph(KGR_SOURCE_DIR "/data/example_kg.json");
}

Model SingleFeatures(const std::vector<std::pair<std::string, Weight>> &feats,
                     Weight w0 = 1.0) {
  Model m;
  m.base_weight = w0;
  int id = 0;
  for (const auto &[text, w] : feats) {
    FeatureNGram f = ParseFeature(text);
    f.id = ++id;
    f.weight = w;
    m.features.push_back(f);
  }
  return m;
}

// (words, weight) of every path of the rescored automaton with boundary
// words removed, sorted.
std::vector<std::pair<std::vector<std::string>, Weight>> RescoredPaths(
    const RescoreResult &r) {
  std::vector<std::pair<std::vector<std::string>, Weight>> out;
  for (auto &[labels, w] : oracle::AllPaths(r.rescored)) {
    std::vector<std::string> words;
    for (Label l : labels) {
      const std::string &s = r.symbols.Symbol(l);
      if (s != kBos && s != kEos) words.push_back(s);
    }
    out.emplace_back(std::move(words), w);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<std::vector<std::string>, Weight>> LatticePaths(
    const Wfst &lat, const SymbolTable &syms) {
  std::vector<std::pair<std::vector<std::string>, Weight>> out;
  for (auto &[labels, w] : oracle::AllPaths(lat)) {
    std::vector<std::string> words;
    for (Label l : labels) words.push_back(syms.Symbol(l));
    out.emplace_back(std::move(words), w);
  }
  return out;
}

TEST(ScoreHypothesis, ExampleSentence) {
  Model m = LoadModel(KGR_SOURCE_DIR "/data/example_model.txt");
  KnowledgeGraph g = ExampleGraph();
  ScoredHypothesis h =
      ScoreHypothesis(SplitWords("play canyon moon by harry styles"), -10, m, g);
  EXPECT_EQ(h.feature_counts, (std::map<int, int>{{1, 1}}));
  EXPECT_DOUBLE_EQ(h.total, -8.8);
  EXPECT_EQ(TotalScore(m, h.base_score, h.feature_counts), h.total);
}

TEST(ScoreHypothesis, EmptyModel) {
  Model m;
  m.base_weight = 0.5;
  ScoredHypothesis h = ScoreHypothesis(SplitWords("a b"), -4, m, ExampleGraph());
  EXPECT_TRUE(h.feature_counts.empty());
  EXPECT_EQ(h.total, -2);
}

TEST(ScoreHypothesis, OverlappingSurface) {
  std::istringstream is(R"({"x": {"names": {"play": {"word count": 1}},
      "types": {"artist": {"popularity": 0.5}}}})");
  KnowledgeGraph g = ReadKnowledgeGraph(is);
  Model m = SingleFeatures({{"play <artist>", 1.0}});
  EXPECT_EQ(ScoreHypothesis(SplitWords("play play"), 0, m, g).feature_counts,
            (std::map<int, int>{{1, 1}}));
  EXPECT_EQ(ScoreHypothesis(SplitWords("play play play"), 0, m, g).feature_counts,
            (std::map<int, int>{{1, 2}}));
}

TEST(Rdet, ExampleStepWeight) {
  Model m = LoadModel(KGR_SOURCE_DIR "/data/example_model.txt");
  KnowledgeGraph g = ExampleGraph();
  RTop r = BuildRTop(m);
  ExpansionContext ctx(r, g);
  RkgFst rkg(ctx);
  Rdet det(rkg);
  StateId s = det.Start();
  Weight total = 0;
  for (const std::string &w : SplitWords("play canyon moon by harry styles")) {
    auto step = det.Step(s, *ctx.WordLabel(w));
    ASSERT_TRUE(step) << w;
    total += step->first;
    s = step->second;
  }
  total += det.Final(s).value();
  EXPECT_DOUBLE_EQ(total, 1.2);
}

TEST(Rdet, SimultaneousCompletions) {
  // A one-word type stands in for the word b.
  Model m = SingleFeatures({{"<t>", 2.0}, {"a <t>", 1.0}});
  RTop r = BuildRTop(m);
  KnowledgeGraph g = WordGraph({"b"});
  ExpansionContext ctx(r, g);
  RkgFst rkg(ctx);
  Rdet det(rkg);
  auto a = det.Step(det.Start(), *ctx.WordLabel("a"));
  ASSERT_TRUE(a);
  EXPECT_EQ(a->first, 0);
  auto b = det.Step(a->second, *ctx.WordLabel("b"));
  ASSERT_TRUE(b);
  // Exits are folded into the next step or the final weight.
  Weight w = b->first + det.Final(b->second).value();
  EXPECT_DOUBLE_EQ(w, 3.0);
}

TEST(Rdet, SigmaIdentityAndDeterminism) {
  Model m;
  RTop r = BuildRTop(m);
  KnowledgeGraph g = ExampleGraph();
  ExpansionContext ctx(r, g);
  RkgFst rkg(ctx);
  Rdet det(rkg);
  auto step = det.Step(det.Start(), *ctx.WordLabel("harry"));
  ASSERT_TRUE(step);
  EXPECT_EQ(step->first, 0);
  EXPECT_EQ(step->second, det.Start());

  Model full = LoadModel(KGR_SOURCE_DIR "/data/example_model.txt");
  RTop rf = BuildRTop(full);
  ExpansionContext cf(rf, g);
  RkgFst rkf(cf);
  Rdet df(rkf);
  std::vector<Arc> arcs;
  for (StateId s = 0; s < static_cast<StateId>(df.NumStates()); ++s) {
    auto subset = df.Subset(s);
    EXPECT_TRUE(std::is_sorted(subset.begin(), subset.end()));
    for (const std::string &w : SplitWords("play canyon moon by harry styles to")) {
      arcs.clear();
      df.Match(s, *cf.WordLabel(w), &arcs);
      EXPECT_LE(arcs.size(), 1u);
    }
  }
}

TEST(RescoreLattice, CorrectsTitle) {
  SymbolTable syms;
  Wfst lat = fixture::CorrectionLattice(&syms);
  Model m = fixture::CorrectionModel();
  KnowledgeGraph g = ExampleGraph();
  RTop r = BuildRTop(m);
  // The base best path is the wrong one.
  Path base = BestPath(lat, &syms);
  std::vector<std::string> base_words;
  for (Label l : base.labels) base_words.push_back(syms.Symbol(l));
  EXPECT_EQ(JoinWords(base_words), "play can you moon by harry styles");
  RescoreResult res = RescoreLattice(lat, syms, m, r, g);
  EXPECT_EQ(JoinWords(res.best.words), "play canyon moon by harry styles");
  EXPECT_DOUBLE_EQ(res.best.total, -10 + 1.2 + 1.0);
  EXPECT_EQ(res.best.feature_counts, (std::map<int, int>{{1, 1}, {2, 1}}));
  for (const auto &[words, w] : LatticePaths(lat, syms)) {
    ScoredHypothesis h = ScoreHypothesis(words, w, m, g);
    EXPECT_LE(h.total, res.best.total + 1e-12);
  }
}

TEST(RescoreLattice, ZeroFeaturesIsIdentity) {
  std::mt19937_64 rng(5);
  KnowledgeGraph g = ExampleGraph();
  Model m;
  RTop r = BuildRTop(m);
  for (int t = 0; t < 20; ++t) {
    SymbolTable syms;
    Wfst lat = oracle::RandomLattice(rng, &syms);
    Path base = BestPath(lat, &syms);
    RescoreResult res = RescoreLattice(lat, syms, m, r, g);
    std::vector<std::string> words;
    for (Label l : base.labels) words.push_back(syms.Symbol(l));
    EXPECT_EQ(res.best.words, words);
    EXPECT_NEAR(res.best.total, base.weight, 1e-12);
  }
}

TEST(RescoreLattice, ZeroBaseWeightRanksByFeatures) {
  SymbolTable syms;
  Wfst lat = fixture::CorrectionLattice(&syms);
  Model m = SingleFeatures({{"harry <t>", 0.5}}, 0.0);
  KnowledgeGraph g = WordGraph({"stiles"});
  RescoreResult res = RescoreLattice(lat, syms, m, BuildRTop(m), g);
  EXPECT_EQ(res.best.words.back(), "stiles");
  EXPECT_EQ(res.best.total, 0.5);
}

TEST(RescoreLattice, EmptyLatticeThrows) {
  SymbolTable syms;
  Model m;
  EXPECT_THROW(RescoreLattice(Wfst(), syms, m, BuildRTop(m), ExampleGraph()), Error);
}

// Every rescored path weight equals the brute-force sum on random instances,
// through both the shared and per-call caches.
TEST(RescoreLattice, MatchesBruteForce) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 150; ++trial) {
    KnowledgeGraph g = oracle::RandomGraph(rng);
    Model m = oracle::RandomModel(rng);
    m.base_weight = oracle::Real(rng, 0, 2);
    RTop r = BuildRTop(m);
    SymbolTable syms;
    Wfst lat = oracle::RandomLattice(rng, &syms);
    LatticeRescorer shared(m, r, g, true), fresh(m, r, g, false);
    RescoreResult a = shared.Rescore(lat, syms);
    RescoreResult b = fresh.Rescore(lat, syms);
    auto got = RescoredPaths(a);
    EXPECT_EQ(RescoredPaths(b), got);
    auto expect = LatticePaths(lat, syms);
    for (auto &[words, w] : expect) {
      Weight naive = oracle::NaiveTotal(g, m, words, w);
      EXPECT_NEAR(ScoreHypothesis(words, w, m, g).total, naive, 1e-9);
      w = naive;
    }
    std::sort(expect.begin(), expect.end());
    ASSERT_EQ(got.size(), expect.size()) << "trial " << trial;
    Weight best = -1e300;
    for (size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].first, expect[i].first) << "trial " << trial;
      EXPECT_NEAR(got[i].second, expect[i].second, 1e-9) << "trial " << trial;
      best = std::max(best, expect[i].second);
    }
    EXPECT_NEAR(a.best.total, best, 1e-9);
    EXPECT_NEAR(oracle::NaiveTotal(g, m, a.best.words, a.best.base_score),
                a.best.total, 1e-9);
  }
}

TEST(RescoreNbest, SortsStablyAndRejectsEmpty) {
  Model m = SingleFeatures({{"<t>", 1.0}});
  KnowledgeGraph g = WordGraph({"x"});
  std::vector<std::pair<std::vector<std::string>, Weight>> hyps = {
      {SplitWords("a"), -1}, {SplitWords("b"), -1}, {SplitWords("x"), -1.5},
      {SplitWords("c"), -3}};
  auto out = RescoreNbest(hyps, m, g);
  std::vector<std::string> order;
  for (const auto &h : out) order.push_back(JoinWords(h.words));
  EXPECT_EQ(order, (std::vector<std::string>{"x", "a", "b", "c"}));
  EXPECT_THROW(RescoreNbest({}, m, g), Error);
}

}  // namespace
}  // namespace kgr
