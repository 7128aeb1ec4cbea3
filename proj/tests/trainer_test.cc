// tests/trainer_test.cc

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

#include <functional>
#include <random>
#include <sstream>

#include "fixtures.h"
#include "kgrescore/experiment.h"
#include "kgrescore/rescorer.h"
#include "kgrescore/trainer.h"

namespace kgr {
namespace {

// Memoized recursion over suffixes.
int OracleDistance(const std::vector<std::string> &a, const std::vector<std::string> &b) {
  std::map<std::pair<size_t, size_t>, int> memo;
  std::function<int(size_t, size_t)> d = [&](size_t i, size_t j) -> int {
    if (i == a.size()) return static_cast<int>(b.size() - j);
    if (j == b.size()) return static_cast<int>(a.size() - i);
    auto it = memo.find({i, j});
    if (it != memo.end()) return it->second;
    int r = std::min({d(i + 1, j) + 1, d(i, j + 1) + 1,
                      d(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1)});
    return memo[{i, j}] = r;
  };
  return d(0, 0);
}

std::string ModelText(const Model &m) {
  std::ostringstream os;
  WriteModel(m, os);
  return os.str();
}

size_t Errors(const std::vector<TrainingExample> &examples, const Model &m,
              const KnowledgeGraph &g) {
  HypothesisScorer scorer(m, g);
  size_t errors = 0;
  for (const TrainingExample &ex : examples)
    if (RescoreNbest(ex.nbest, scorer)[0].words != ex.reference) ++errors;
  return errors;
}

TEST(EditDistance, MatchesRecursion) {
  std::mt19937_64 rng(3);
  const char *vocab[] = {"a", "b", "c"};
  for (int t = 0; t < 300; ++t) {
    std::vector<std::string> a, b;
    for (int i = rng() % 7; i > 0; --i) a.push_back(vocab[rng() % 3]);
    for (int i = rng() % 7; i > 0; --i) b.push_back(vocab[rng() % 3]);
    EXPECT_EQ(EditDistance(a, b), OracleDistance(a, b));
  }
  EXPECT_EQ(EditDistance({}, SplitWords("x y")), 2);
}

TEST(OracleIndex, TiesGoToHigherBaseThenEarlier) {
  TrainingExample ex{"u", SplitWords("a b c"),
                     {{SplitWords("a b"), -2}, {SplitWords("a x c"), -1}}};
  EXPECT_EQ(OracleIndex(ex), 1u);
  ex.nbest[1].second = -2;
  EXPECT_EQ(OracleIndex(ex), 0u);
  ex.nbest.push_back({SplitWords("a b c"), -9});
  EXPECT_EQ(OracleIndex(ex), 2u);
  ex.nbest.clear();
  EXPECT_THROW(OracleIndex(ex), Error);
}

TEST(Train, NoUpdatesWhenBaseIsRight) {
  auto examples = fixture::SeparableExamples();
  for (auto &ex : examples) ex.nbest[2].second = 0;  // reference now on top
  KnowledgeGraph g = fixture::SeparableGraph();
  TrainStats stats;
  Model m = Train(examples, fixture::SeparableFeatures(), g, TrainerConfig{}, &stats);
  EXPECT_EQ(stats.updates, 0);
  EXPECT_EQ(m.base_weight, 1.0);
  for (const auto &f : m.features) EXPECT_EQ(f.weight, 0);
}

TEST(Train, SingleUpdate) {
  auto examples = fixture::SeparableExamples();
  examples.resize(1);
  TrainerConfig c;
  c.epochs = 1;
  c.averaging = false;
  c.train_base_weight = false;
  TrainStats stats;
  Model m = Train(examples, fixture::SeparableFeatures(), fixture::SeparableGraph(),
                  c, &stats);
  EXPECT_EQ(stats.updates, 1);
  EXPECT_EQ(m.base_weight, 1.0);
  // Gold "call it good" fires <good> and it <good>; "call it bad" fires
  // <bad> and it <bad> </s>.
  std::vector<Weight> w;
  for (const auto &f : m.features) w.push_back(f.weight);
  EXPECT_EQ(w, (std::vector<Weight>{1, -1, 1, -1}));
}

// Unshuffled training against a direct average of every iterate.
TEST(Train, AveragingMatchesExplicitMean) {
  auto examples = fixture::SeparableExamples();
  auto features = fixture::SeparableFeatures();
  KnowledgeGraph g = fixture::SeparableGraph();
  TrainerConfig c;
  c.epochs = 3;
  c.shuffle = false;
  c.learning_rate = 0.5;
  Model trained = Train(examples, features, g, c);

  Model work;
  work.features = features;
  const size_t dim = features.size() + 1;
  std::vector<double> w(dim, 0), sum(dim, 0);
  w[0] = c.initial_base_weight;
  size_t visits = 0;
  auto phi = [&](const Hypothesis &h) {
    std::vector<double> v(dim, 0);
    v[0] = h.second;
    for (auto [id, n] : ScoreHypothesis(h.first, h.second, work, g).feature_counts)
      v[id] = n;
    return v;
  };
  for (int e = 0; e < c.epochs; ++e) {
    for (const auto &ex : examples) {
      size_t pred = 0;
      double best = -1e300;
      for (size_t k = 0; k < ex.nbest.size(); ++k) {
        auto v = phi(ex.nbest[k]);
        double s = 0;
        for (size_t d = 0; d < dim; ++d) s += w[d] * v[d];
        if (s > best) best = s, pred = k;
      }
      const size_t gold = OracleIndex(ex);
      if (ex.nbest[pred].first != ex.nbest[gold].first) {
        auto vg = phi(ex.nbest[gold]), vp = phi(ex.nbest[pred]);
        for (size_t d = 0; d < dim; ++d) w[d] += c.learning_rate * (vg[d] - vp[d]);
      }
      for (size_t d = 0; d < dim; ++d) sum[d] += w[d];
      ++visits;
    }
  }
  EXPECT_NEAR(trained.base_weight, sum[0] / visits, 1e-12);
  for (const auto &f : trained.features)
    EXPECT_NEAR(f.weight, sum[f.id] / visits, 1e-12);
}

TEST(Train, SeparableReachesZeroErrors) {
  auto examples = fixture::SeparableExamples();
  KnowledgeGraph g = fixture::SeparableGraph();
  TrainStats stats;
  TrainerConfig c;
  Model m = Train(examples, fixture::SeparableFeatures(), g, c, &stats);
  ASSERT_EQ(stats.mistakes_per_epoch.size(), 10u);
  EXPECT_GT(stats.mistakes_per_epoch.front(), 0);
  EXPECT_EQ(stats.mistakes_per_epoch.back(), 0);
  EXPECT_EQ(Errors(examples, m, g), 0u);
  Model again = Train(examples, fixture::SeparableFeatures(), g, c);
  EXPECT_EQ(ModelText(m), ModelText(again));
}

TEST(Train, RejectsBadInput) {
  KnowledgeGraph g = fixture::SeparableGraph();
  EXPECT_THROW(Train({}, fixture::SeparableFeatures(), g, TrainerConfig{}), Error);
  auto examples = fixture::SeparableExamples();
  TrainerConfig c;
  c.epochs = 0;
  EXPECT_THROW(Train(examples, fixture::SeparableFeatures(), g, c), Error);
  examples[0].nbest[0].second = std::nan("");
  EXPECT_THROW(Train(examples, fixture::SeparableFeatures(), g, TrainerConfig{}), Error);
}

TEST(TrainingFile, RoundTripAndErrors) {
  auto examples = fixture::SeparableExamples();
  std::stringstream ss;
  WriteTrainingExamples(examples, ss);
  auto back = ReadTrainingExamples(ss);
  ASSERT_EQ(back.size(), examples.size());
  for (size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].utt_id, examples[i].utt_id);
    EXPECT_EQ(back[i].reference, examples[i].reference);
    EXPECT_EQ(back[i].nbest, examples[i].nbest);
  }
  std::istringstream bad("u\tREF\ta b\nHYP\tnope\ta b\n");
  try {
    ReadTrainingExamples(bad);
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream empty("u\tREF\ta b\n");
  EXPECT_THROW(ReadTrainingExamples(empty), ParseError);
}

// Training on noisy synthesized city/state requests fixes some of them.
TEST(Train, ReducesErrorsOnSynthesizedData) {
  KnowledgeGraph g = LoadKnowledgeGraph(KGR_SOURCE_DIR "/data/toy_kg.json");
  auto templates = LoadTemplates(KGR_SOURCE_DIR "/data/templates/city_state.tsv");
  NoiseChannelConfig channel;
  channel.pool = DefaultConfusionPool(g, {&templates}, {}, 3);
  SymbolTable syms;
  auto noisy = SynthesizeNoisy(templates, g, PopTier::kTail, 50, 17, 0.45, 0.03,
                               &channel, &syms);
  std::vector<TrainingExample> examples;
  for (size_t i = 0; i < noisy.size(); ++i)
    examples.push_back({"u" + std::to_string(i), noisy[i].sample.words,
                        noisy[i].corrupt.nbest});
  auto features = ExtractFeatures(templates);
  Model baseline;
  const size_t before = Errors(examples, baseline, g);
  Model m = Train(examples, features, g, TrainerConfig{});
  EXPECT_GT(before, 0u);
  EXPECT_LT(Errors(examples, m, g), before);
}

}  // namespace
}  // namespace kgr
