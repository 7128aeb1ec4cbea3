// tests/synth_test.cc

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

#include <cmath>
#include <set>
#include <sstream>

#include "kgrescore/synth.h"
#include "oracle.h"

namespace kgr {
namespace {

const char *kCityState = R"({
  "s1": {"names": {"texas": {"word count": 1}}, "types": {"state": {"popularity": 0.5}},
         "relationships": [{"relation": "contains", "entity id": "c1", "popularity": 0.1}]},
  "s2": {"names": {"ohio": {"word count": 1}}, "types": {"state": {"popularity": 0.4}}},
  "c1": {"names": {"amherst": {"word count": 1}}, "types": {"city": {"popularity": 0.2}},
         "relationships": [{"relation": "is in", "entity id": "s1", "popularity": 0.1}]},
  "c2": {"names": {"dayton": {"word count": 1}}, "types": {"city": {"popularity": 0.3}},
         "relationships": [{"relation": "is in", "entity id": "s2", "popularity": 0.1}]}})";

KnowledgeGraph Parse(const char *text) {
  std::istringstream is(text);
  return ReadKnowledgeGraph(is);
}

std::vector<Template> Templates(const std::string &text) {
  std::istringstream is(text);
  return ReadTemplates(is);
}

std::string Corpus(const std::vector<SampledUtterance> &us) {
  std::string out;
  for (const auto &u : us) out += JoinWords(u.words) + "\n";
  return out;
}

TEST(SampleUtterances, RelationForcesPairs) {
  // Only texas contains a city, and only amherst lies in it.
  KnowledgeGraph g = Parse(kCityState);
  auto t = Templates("directions to <city> <state;rel=contains@1>\t1\n");
  auto us = SampleUtterances(t, g, PopTier::kHead, 200, 4);
  ASSERT_EQ(us.size(), 200u);
  for (const auto &u : us) {
    EXPECT_EQ(JoinWords(u.words), "directions to amherst texas");
    ASSERT_EQ(u.relations.size(), 1u);
    EXPECT_EQ(u.relations[0], std::make_pair(*g.Find("c1"), *g.Find("s1")));
    ASSERT_EQ(u.entities.size(), 2u);
    EXPECT_EQ(u.entities[1].begin, 3u);
    EXPECT_EQ(u.entities[1].end, 4u);
  }
}

TEST(SampleUtterances, TemplateShareFollowsFrequency) {
  KnowledgeGraph g = Parse(kCityState);
  auto t = Templates("one <city>\t0.9\ntwo <city>\t0.1\n");
  auto us = SampleUtterances(t, g, PopTier::kHead, 10000, 2026);
  double first = 0;
  for (const auto &u : us) first += u.words[0] == "one";
  first /= us.size();
  EXPECT_GE(first, 0.88);
  EXPECT_LE(first, 0.92);
}

TEST(SampleUtterances, ReproducibleAndEmpty) {
  KnowledgeGraph g = LoadKnowledgeGraph(KGR_SOURCE_DIR "/data/toy_kg.json");
  auto t = LoadTemplates(KGR_SOURCE_DIR "/data/templates/title_artist.tsv");
  EXPECT_EQ(Corpus(SampleUtterances(t, g, PopTier::kTail, 300, 9)),
            Corpus(SampleUtterances(t, g, PopTier::kTail, 300, 9)));
  EXPECT_NE(Corpus(SampleUtterances(t, g, PopTier::kTail, 300, 9)),
            Corpus(SampleUtterances(t, g, PopTier::kTail, 300, 10)));
  EXPECT_TRUE(SampleUtterances(t, g, PopTier::kTail, 0, 9).empty());
  EXPECT_TRUE(SampleUtterances({}, g, PopTier::kTail, 0, 9).empty());
  EXPECT_THROW(SampleUtterances({}, g, PopTier::kTail, 1, 9), Error);
}

TEST(SampleUtterances, StaysInBand) {
  KnowledgeGraph g = LoadKnowledgeGraph(KGR_SOURCE_DIR "/data/toy_kg.json");
  auto t = LoadTemplates(KGR_SOURCE_DIR "/data/templates/city_state.tsv");
  for (PopTier tier : {PopTier::kHead, PopTier::kTorso, PopTier::kTail}) {
    auto [lo, hi] = StratumBand(g.strata("city"), tier);
    for (const auto &u : SampleUtterances(t, g, tier, 200, 1)) {
      int rank = g.Rank(u.entities[0].entity, "city");
      EXPECT_GE(rank, lo);
      EXPECT_LE(rank, hi);
      // The state is related to the city, not drawn from the band.
      EXPECT_TRUE(EntitySatisfies(g, u.entities[1].entity,
                                  ParseNonTerminal("<state;rel=contains@1>"),
                                  {{1, {u.entities[0].entity}}}));
    }
  }
}

TEST(SampleUtterances, EmptyBandThrows) {
  std::istringstream is(R"({"_strata": {"city": {"head": 1, "torso": 1, "tail": 2}},
    "c1": {"names": {"amherst": {"word count": 1}}, "types": {"city": {"popularity": 0.2}}}})");
  KnowledgeGraph g = ReadKnowledgeGraph(is);
  auto t = Templates("to <city>\t1\n");
  EXPECT_NO_THROW(SampleUtterances(t, g, PopTier::kHead, 5, 1));
  EXPECT_THROW(SampleUtterances(t, g, PopTier::kTorso, 5, 1), Error);
}

TEST(StratumBand, PartitionsRanks) {
  Strata s{3, 10, 25};
  std::set<int> seen;
  for (PopTier tier : {PopTier::kHead, PopTier::kTorso, PopTier::kTail}) {
    auto [lo, hi] = StratumBand(s, tier);
    for (int r = lo; r <= hi; ++r) EXPECT_TRUE(seen.insert(r).second);
  }
  EXPECT_EQ(seen.size(), 25u);
  EXPECT_EQ(*seen.begin(), 1);
  EXPECT_EQ(*seen.rbegin(), 25);
}

TEST(Rng, PickFollowsWeights) {
  Rng rng(1);
  EXPECT_THROW(rng.Pick({}), Error);
  EXPECT_EQ(rng.Pick({0, 0, 5}), 2u);
  int hits = 0;
  for (int i = 0; i < 20000; ++i) hits += rng.Pick({1, 3}) == 1;
  EXPECT_NEAR(hits / 20000.0, 0.75, 0.015);
}

TEST(WithinOneEdit, Cases) {
  EXPECT_TRUE(WithinOneEdit("cat", "bat"));
  EXPECT_TRUE(WithinOneEdit("cat", "cats"));
  EXPECT_TRUE(WithinOneEdit("cat", "at"));
  EXPECT_TRUE(WithinOneEdit("", "a"));
  EXPECT_FALSE(WithinOneEdit("cat", "cat"));
  EXPECT_FALSE(WithinOneEdit("cat", "dog"));
  EXPECT_FALSE(WithinOneEdit("cat", "tac"));
  EXPECT_FALSE(WithinOneEdit("ab", "abcd"));
}

TEST(ConfusionPool, NeighboursExtrasAndPadding) {
  ConfusionPool extra{{"canyon", {{"can", "you"}}}};
  ConfusionPool pool = BuildConfusionPool({"cat", "bat", "dog", "canyon"}, extra, 2);
  const auto &cat = pool.at("cat");
  EXPECT_EQ(cat[0], std::vector<std::string>{"bat"});
  EXPECT_EQ(cat.size(), 2u);
  EXPECT_TRUE(WithinOneEdit("cat", cat[1][0]));
  EXPECT_EQ(pool.at("canyon")[0], (std::vector<std::string>{"can", "you"}));
  for (const auto &[w, alts] : pool) {
    EXPECT_GE(alts.size(), 2u) << w;
    for (const auto &a : alts) EXPECT_NE(a, std::vector<std::string>{w});
  }
}

TEST(CorruptToLattice, RateZeroIsSinglePath) {
  NoiseChannelConfig c;
  c.substitution_rate = 0;
  c.pool = BuildConfusionPool({"play", "canyon", "moon"}, {}, 2);
  SymbolTable syms;
  auto r = CorruptToLattice(SplitWords("play canyon moon"), c, &syms);
  auto paths = oracle::AllPaths(r.lattice);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].second, 0);
  ASSERT_EQ(r.nbest.size(), 1u);
  EXPECT_EQ(JoinWords(r.nbest[0].first), "play canyon moon");
}

TEST(CorruptToLattice, BreadthTwoOnePosition) {
  NoiseChannelConfig c;
  c.position_rates = {0, 1, 0};
  c.breadth = 2;
  c.pool = BuildConfusionPool({"play", "canyon", "moon"}, {}, 3);
  SymbolTable syms;
  auto r = CorruptToLattice(SplitWords("play canyon moon"), c, &syms);
  auto paths = oracle::AllPaths(r.lattice);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_NEAR(std::exp(paths[0].second) + std::exp(paths[1].second), 1.0, 1e-12);
  EXPECT_EQ(r.nbest.size(), 2u);
  EXPECT_TRUE(LatticeContains(r.lattice, syms, SplitWords("play canyon moon")));
}

TEST(CorruptToLattice, MultiWordCompetitor) {
  NoiseChannelConfig c;
  c.position_rates = {0, 1, 0};
  c.pool = {{"canyon", {{"can", "you"}}}};
  int wins = 0;
  for (uint64_t seed = 1; seed <= 40; ++seed) {
    c.seed = seed;
    SymbolTable syms;
    auto r = CorruptToLattice(SplitWords("play canyon moon"), c, &syms);
    ASSERT_EQ(r.nbest.size(), 2u);
    EXPECT_TRUE(LatticeContains(r.lattice, syms, SplitWords("play can you moon")));
    EXPECT_TRUE(LatticeContains(r.lattice, syms, SplitWords("play canyon moon")));
    wins += JoinWords(r.nbest[0].first) == "play can you moon";
  }
  EXPECT_GT(wins, 5);
  EXPECT_LT(wins, 35);
}

TEST(CorruptToLattice, HarmonicSplitAndDeterminism) {
  NoiseChannelConfig c;
  c.substitution_rate = 1;
  c.breadth = 4;
  c.nbest = 100;
  c.pool = BuildConfusionPool({"alpha", "beta"}, {}, 5);
  SymbolTable syms;
  auto r = CorruptToLattice(SplitWords("alpha beta"), c, &syms);
  double mass = 0;
  for (const auto &[labels, w] : oracle::AllPaths(r.lattice)) mass += std::exp(w);
  EXPECT_NEAR(mass, 1.0, 1e-12);
  EXPECT_EQ(r.nbest.size(), 16u);
  SymbolTable syms2;
  auto r2 = CorruptToLattice(SplitWords("alpha beta"), c, &syms2);
  EXPECT_EQ(r.lattice, r2.lattice);
  EXPECT_EQ(r.nbest, r2.nbest);
}

TEST(CorruptToLattice, RejectsBadInput) {
  NoiseChannelConfig c;
  SymbolTable syms;
  EXPECT_THROW(CorruptToLattice({}, c, &syms), Error);
  c.position_rates = {0.5};
  EXPECT_THROW(CorruptToLattice(SplitWords("a b"), c, &syms), Error);
  c.position_rates.clear();
  c.substitution_rate = 1.5;
  EXPECT_THROW(CorruptToLattice(SplitWords("a b"), c, &syms), Error);
  c.substitution_rate = 0.5;
  c.breadth = 0;
  EXPECT_THROW(CorruptToLattice(SplitWords("a b"), c, &syms), Error);
}

TEST(Evaluate, SentenceErrorRate) {
  std::map<std::string, std::vector<std::string>> ref = {
      {"a", SplitWords("x y")}, {"b", SplitWords("z")},
      {"c", SplitWords("p q")}, {"d", SplitWords("r")}};
  EXPECT_EQ(Evaluate(ref, ref).ser, 0);
  auto out = ref;
  out["c"] = SplitWords("p");
  out["a"] = SplitWords("X Y");
  EvalReport r = Evaluate(out, ref);
  EXPECT_EQ(r.errors, 1u);
  EXPECT_EQ(r.ser, 0.25);
  EXPECT_FALSE(r.oracle_ser);
  out.erase("d");
  EXPECT_THROW(Evaluate(out, ref), Error);
}

TEST(Evaluate, OracleFromLattices) {
  NoiseChannelConfig c;
  c.substitution_rate = 0.5;
  c.pool = BuildConfusionPool({"x", "y", "z"}, {}, 2);
  SymbolTable syms;
  std::map<std::string, std::vector<std::string>> ref = {
      {"a", SplitWords("x y")}, {"b", SplitWords("z x")}};
  std::map<std::string, Wfst> lats;
  std::map<std::string, const Wfst *> ptrs;
  for (const auto &[id, words] : ref) {
    lats[id] = CorruptToLattice(words, c, &syms).lattice;
    ptrs[id] = &lats[id];
  }
  auto wrong = ref;
  wrong["a"] = SplitWords("q");
  EvalReport r = Evaluate(wrong, ref, &ptrs, &syms);
  EXPECT_EQ(r.ser, 0.5);
  EXPECT_EQ(r.oracle_ser, 0.0);
  EXPECT_GE(r.ser, *r.oracle_ser);
}

TEST(Files, CorpusAndConfusions) {
  std::istringstream corpus("u1\tPlay Canyon\nu2\t\n\nu3\tx y\n");
  auto c = ReadCorpus(corpus);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].second, SplitWords("play canyon"));
  EXPECT_TRUE(c[1].second.empty());
  std::ostringstream os;
  WriteCorpus(c, os);
  EXPECT_EQ(os.str(), "u1\tplay canyon\nu2\t\nu3\tx y\n");
  std::istringstream dup("u1\ta\nu1\tb\n");
  EXPECT_THROW(ReadCorpus(dup), ParseError);

  std::istringstream conf("# comment\ncanyon\tcan you, canon\nmoon\tmoan\n");
  ConfusionPool pool = ReadConfusions(conf);
  EXPECT_EQ(pool.at("canyon"),
            (std::vector<std::vector<std::string>>{{"can", "you"}, {"canon"}}));
  EXPECT_EQ(pool.at("moon").size(), 1u);
  std::istringstream bad("two words\tx\n");
  EXPECT_THROW(ReadConfusions(bad), ParseError);
}

}  // namespace
}  // namespace kgr
