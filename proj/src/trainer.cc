// src/trainer.cc

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

#include "kgrescore/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "kgrescore/rescorer.h"

namespace kgr {

int EditDistance(const std::vector<std::string> &a,
                 const std::vector<std::string> &b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

size_t OracleIndex(const TrainingExample &example) {
  if (example.nbest.empty())
    throw Error("example '" + example.utt_id + "' has an empty n-best list");
  size_t best = 0;
  int best_d = EditDistance(example.nbest[0].first, example.reference);
  for (size_t i = 1; i < example.nbest.size(); ++i) {
    int d = EditDistance(example.nbest[i].first, example.reference);
    if (d < best_d ||
        (d == best_d && example.nbest[i].second > example.nbest[best].second)) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

namespace {

// Feature vector of one hypothesis: slot 0 is the base score.
struct Phi {
  Weight base = 0;
  std::vector<std::pair<int, int>> counts;  // (feature id, count), id order
};

Weight Dot(const std::vector<Weight> &w, const Phi &phi) {
  Weight s = w[0] * phi.base;
  for (auto [id, c] : phi.counts) s += w[id] * c;
  return s;
}

}  // namespace

Model Train(const std::vector<TrainingExample> &examples,
            const std::vector<FeatureNGram> &features,
            const KnowledgeGraph &graph, const TrainerConfig &config,
            TrainStats *stats) {
  if (examples.empty()) throw Error("no training examples");
  if (config.epochs < 1) throw Error("epochs must be at least 1");
  Model model;
  model.features = features;
  for (FeatureNGram &f : model.features) f.weight = 0;
  model.base_weight = config.initial_base_weight;
  model.Validate();

  HypothesisScorer scorer(model, graph);
  std::vector<std::vector<Phi>> phis(examples.size());
  std::vector<size_t> gold(examples.size());
  for (size_t i = 0; i < examples.size(); ++i) {
    const TrainingExample &ex = examples[i];
    gold[i] = OracleIndex(ex);
    for (const auto &[words, base] : ex.nbest) {
      if (!std::isfinite(base))
        throw Error("example '" + ex.utt_id + "' has a non-finite base score");
      Phi phi;
      phi.base = base;
      for (auto [id, c] : scorer.Count(words)) phi.counts.emplace_back(id, c);
      phis[i].push_back(std::move(phi));
    }
  }

  const size_t dim = model.features.size() + 1;
  std::vector<Weight> w(dim, 0), u(dim, 0);
  w[0] = config.initial_base_weight;
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  TrainStats local;
  double step = 1;  // index of the current example visit, 1-based
  auto update = [&](size_t slot, Weight delta) {
    if (slot == 0 && !config.train_base_weight) return;
    w[slot] += delta;
    u[slot] += (step - 1) * delta;
  };
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    int mistakes = 0;
    for (size_t i : order) {
      const auto &cands = phis[i];
      size_t pred = 0;
      Weight best = Dot(w, cands[0]);
      for (size_t k = 1; k < cands.size(); ++k) {
        Weight s = Dot(w, cands[k]);
        if (s > best) {
          best = s;
          pred = k;
        }
      }
      const auto &nb = examples[i].nbest;
      if (nb[pred].first != nb[gold[i]].first) {
        ++mistakes;
        ++local.updates;
        const Weight eta = config.learning_rate;
        const Phi &g = cands[gold[i]], &p = cands[pred];
        update(0, eta * (g.base - p.base));
        for (auto [id, c] : g.counts) update(id, eta * c);
        for (auto [id, c] : p.counts) update(id, -eta * c);
      }
      step += 1;
    }
    local.mistakes_per_epoch.push_back(mistakes);
  }
  // An update at visit t survives in T - t + 1 of the T iterates, so the
  // average is w - u / T with u = sum (t - 1) * delta.
  const double visits = step - 1;
  auto final_weight = [&](size_t slot) {
    return config.averaging ? w[slot] - u[slot] / visits : w[slot];
  };
  model.base_weight = final_weight(0);
  for (FeatureNGram &f : model.features) f.weight = final_weight(f.id);
  if (stats) *stats = std::move(local);
  return model;
}

// ---------------------------------------------------------------------------

std::vector<TrainingExample> ReadTrainingExamples(std::istream &is) {
  std::vector<TrainingExample> out;
  std::string line;
  int lineno = 0;
  bool in_block = false;
  auto fail = [&](const std::string &msg) {
    throw ParseError("training file line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (TrimView(line).empty()) {
      in_block = false;
      continue;
    }
    auto f = SplitTabs(line);
    if (!in_block) {
      if (f.size() != 3 || f[1] != "REF") fail("expected utt<TAB>REF<TAB>words");
      TrainingExample ex;
      ex.utt_id = f[0];
      ex.reference = SplitWords(ToLower(f[2]));
      out.push_back(std::move(ex));
      in_block = true;
      continue;
    }
    if (f.size() != 3 || f[0] != "HYP") fail("expected HYP<TAB>base<TAB>words");
    try {
      out.back().nbest.emplace_back(SplitWords(ToLower(f[2])), ParseWeight(f[1]));
    } catch (const ParseError &e) {
      fail(e.what());
    }
  }
  for (const TrainingExample &ex : out)
    if (ex.nbest.empty())
      throw ParseError("training example '" + ex.utt_id + "' has no hypotheses");
  return out;
}

void WriteTrainingExamples(const std::vector<TrainingExample> &examples,
                           std::ostream &os) {
  for (size_t i = 0; i < examples.size(); ++i) {
    const TrainingExample &ex = examples[i];
    if (i) os << '\n';
    os << ex.utt_id << "\tREF\t" << JoinWords(ex.reference) << '\n';
    for (const auto &[words, base] : ex.nbest)
      os << "HYP\t" << FormatWeight(base) << '\t' << JoinWords(words) << '\n';
  }
}

std::vector<TrainingExample> LoadTrainingExamples(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  try {
    return ReadTrainingExamples(is);
  } catch (const ParseError &e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace kgr
