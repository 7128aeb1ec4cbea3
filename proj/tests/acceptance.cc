// tests/acceptance.cc

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

// Acceptance checks.  Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.h"
#include "kgrescore/experiment.h"
#include "kgrescore/rescorer.h"
#include "oracle.h"

namespace kgr {
namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string Format(const char *fmt, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c);
  return buf;
}

struct Instance {
  KnowledgeGraph graph;
  Model model;
  RTop rtop;
  SymbolTable syms;
  Wfst lattice;
};

std::vector<Instance> RandomInstances(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Instance> out(n);
  for (Instance &in : out) {
    in.graph = oracle::RandomGraph(rng, 20);
    in.model = oracle::RandomModel(rng, 15);
    in.model.base_weight = oracle::Real(rng, 0, 2);
    in.rtop = BuildRTop(in.model);
    in.lattice = oracle::RandomLattice(rng, &in.syms, 12);
  }
  return out;
}

// 1. Every lattice path's rescored weight equals the brute-force total.
Outcome OracleEquivalence(const std::vector<Instance> &instances) {
  Outcome o;
  size_t paths = 0, bad = 0;
  double worst = 0;
  for (const Instance &in : instances) {
    LatticeRescorer rescorer(in.model, in.rtop, in.graph);
    RescoreResult r = rescorer.Rescore(in.lattice, in.syms);
    std::vector<std::pair<std::vector<std::string>, Weight>> got, want;
    for (auto &[labels, w] : oracle::AllPaths(r.rescored)) {
      std::vector<std::string> words;
      for (Label l : labels)
        if (r.symbols.Symbol(l) != kBos && r.symbols.Symbol(l) != kEos)
          words.push_back(r.symbols.Symbol(l));
      got.emplace_back(std::move(words), w);
    }
    for (auto &[labels, base] : oracle::AllPaths(in.lattice)) {
      std::vector<std::string> words;
      for (Label l : labels) words.push_back(in.syms.Symbol(l));
      const Weight scored = ScoreHypothesis(words, base, in.model, in.graph).total;
      const Weight naive = oracle::NaiveTotal(in.graph, in.model, words, base);
      worst = std::max(worst, std::fabs(scored - naive));
      if (std::fabs(scored - naive) > 1e-9) ++bad;
      want.emplace_back(std::move(words), scored);
    }
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    if (got.size() != want.size()) {
      ++bad;
      continue;
    }
    for (size_t i = 0; i < got.size(); ++i) {
      ++paths;
      const double d = std::fabs(got[i].second - want[i].second);
      worst = std::max(worst, d);
      if (got[i].first != want[i].first || d > 1e-9) ++bad;
    }
  }
  o.pass = bad == 0 && instances.size() >= 500;
  o.detail = std::to_string(instances.size()) + " instances, " + std::to_string(paths) +
             " paths, " + std::to_string(bad) + " mismatches, max |diff| " +
             Format("%.3g", worst);
  return o;
}

// 2. Realization sub-path counts and weight placement in the dumped R_kg.
Outcome StructuralProperties(const std::vector<Instance> &instances) {
  Outcome o;
  std::mt19937_64 rng(77);
  size_t checked = 0, bad_count = 0, bad_weight = 0;
  for (const Instance &in : instances) {
    ExpansionContext ctx(in.rtop, in.graph);
    oracle::DumpedRkg d = oracle::DumpRkgText(ctx);
    if (!oracle::WeightsOnlyOnEndTags(d.fst)) ++bad_weight;
    for (const FeatureNGram &f : in.model.features) {
      auto cands = oracle::Realizations(in.graph, f, 50);
      for (int k = 0; k < 3; ++k) {
        std::vector<std::string> w;
        for (int j = oracle::Uniform(rng, 1, 4); j > 0; --j)
          w.push_back(oracle::Vocab()[oracle::Uniform(rng, 0, 5)]);
        cands.push_back(w);
      }
      for (const auto &w : cands) {
        ++checked;
        if (oracle::CountSubPaths(d, f.id, w) !=
            oracle::CountRealizations(in.graph, f, w, true))
          ++bad_count;
      }
    }
  }
  o.pass = bad_count == 0 && bad_weight == 0;
  o.detail = std::to_string(checked) + " word sequences, " + std::to_string(bad_count) +
             " count mismatches, " + std::to_string(bad_weight) +
             " automata with misplaced weights";
  return o;
}

std::string ReadFile(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// 3. The three example features compile to exactly their tagged paths.
Outcome ExampleTopology() {
  Outcome o;
  Model m = LoadModel(KGR_SOURCE_DIR "/data/example_model.txt");
  RTop r = BuildRTop(m);
  const std::multiset<oracle::TagPath> expected = {
      {{"play", "<music_title>", "by"}, 1, 1.2},
      {{"play", "<music_artist>"}, 2, 0.8},
      {{"to", "<city>", "<state;rel=contains@1>"}, 3, -0.4}};
  std::multiset<oracle::TagPath> got;
  try {
    got = oracle::TagPaths(r);
  } catch (const std::exception &e) {
    return {false, e.what()};
  }
  bool paths = got == expected;
  bool deterministic = true;
  for (StateId s = 0; s < r.fst.NumStates(); ++s) {
    std::set<std::tuple<Label, Label, Weight>> seen;
    for (const Arc &a : r.fst.Arcs(s))
      deterministic &= seen.emplace(a.ilabel, a.olabel, a.weight).second;
  }
  auto bytes = [](const RTop &t) {
    std::ostringstream f, s;
    WriteRTop(t, f, s);
    return f.str() + s.str();
  };
  const std::string once = bytes(r);
  const bool stable =
      once == bytes(BuildRTop(m)) &&
      once == ReadFile(KGR_SOURCE_DIR "/tests/data/example_rtop.fst") +
                  ReadFile(KGR_SOURCE_DIR "/tests/data/example_rtop.syms");
  o.pass = paths && deterministic && stable;
  o.detail = std::string("tagged paths ") + (paths ? "exact" : "differ") +
             " (1.2, 0.8, -0.4), " + (deterministic ? "" : "not ") +
             "deterministic over (in, out, weight), bytes " +
             (stable ? "stable" : "unstable") + ", " +
             std::to_string(r.fst.NumStates()) + " states";
  return o;
}

// 4. The title and relation features correct the "can you moon" lattice.
Outcome LatticeCorrection() {
  Outcome o;
  SymbolTable syms;
  Wfst lat = fixture::CorrectionLattice(&syms);
  Model m = fixture::CorrectionModel();
  KnowledgeGraph g = LoadKnowledgeGraph(KGR_SOURCE_DIR "/data/example_kg.json");
  Path base = BestPath(lat, &syms);
  std::vector<std::string> base_words;
  for (Label l : base.labels) base_words.push_back(syms.Symbol(l));
  RescoreResult r = RescoreLattice(lat, syms, m, BuildRTop(m), g);
  // The brute-force scorer must agree on the winner.
  std::string brute;
  Weight brute_best = -1e300;
  for (auto &[labels, w] : oracle::AllPaths(lat)) {
    std::vector<std::string> words;
    for (Label l : labels) words.push_back(syms.Symbol(l));
    ScoredHypothesis h = ScoreHypothesis(words, w, m, g);
    if (h.total > brute_best) brute_best = h.total, brute = JoinWords(words);
  }
  const std::string want = "play canyon moon by harry styles";
  o.pass = JoinWords(base_words) == "play can you moon by harry styles" &&
           JoinWords(r.best.words) == want && brute == want &&
           std::fabs(brute_best - r.best.total) < 1e-9;
  o.detail = "baseline '" + JoinWords(base_words) + "' -> '" + JoinWords(r.best.words) +
             "' " + Format("(%.2f -> %.2f)", base.weight, r.best.total);
  return o;
}

// Per-utterance output lines of every model on every test set.
std::string RescoreAll(const ExperimentData &data, const ExperimentResult &result,
                       int workers, bool shared) {
  std::ostringstream os;
  for (const Model &m : result.models) {
    RTop r = BuildRTop(m);
    LatticeRescorer rescorer(m, r, data.graph, shared);
    for (const TestSet &set : data.tests) {
      auto best = RescoreTestSet(set, data.symbols, rescorer, workers);
      for (size_t i = 0; i < best.size(); ++i) {
        os << set.utterances[i].id << '\t' << JoinWords(best[i].words) << '\t'
           << FormatWeight(best[i].total) << '\t';
        for (auto [id, c] : best[i].feature_counts) os << id << ':' << c << ',';
        os << '\n';
      }
    }
  }
  return os.str();
}

struct ExperimentChecks {
  Outcome reduction, ordering, parallel;
  std::string report;
};

ExperimentChecks Experiment() {
  ExperimentChecks out;
  ExperimentConfig c;
  c.kg_path = KGR_SOURCE_DIR "/data/toy_kg.json";
  c.templates_dir = KGR_SOURCE_DIR "/data/templates";
  c.confusions_path = KGR_SOURCE_DIR "/data/confusions.tsv";
  ExperimentData data = PrepareExperiment(c);
  c.workers = 1;
  ExperimentResult r1 = RunExperiment(c, data);
  c.workers = 8;
  ExperimentResult r8 = RunExperiment(c, data);
  std::ostringstream rep1, rep8;
  WriteReport(r1, rep1);
  WriteReport(r8, rep8);
  out.report = rep1.str();

  const size_t rpc = 2, deal = 0, deal_r = 1;
  std::string detail;
  bool pass = true;
  for (const std::string &set : c.entity_sets) {
    for (const char *stratum : {"torso", "tail"}) {
      const ReportRow *row = r1.Find(set, stratum);
      const double rel = row->baseline_ser > 0
                             ? (row->baseline_ser - row->variant_ser[rpc]) / row->baseline_ser
                             : 0;
      pass &= rel >= 0.10;
      detail += set + "/" + stratum + Format(" %.3f->%.3f (%.0f%%); ", row->baseline_ser,
                                             row->variant_ser[rpc], 100 * rel);
    }
  }
  const ReportRow *general = r1.Find(c.general_set, "-");
  const double degradation = general->variant_ser[rpc] - general->baseline_ser;
  pass &= degradation <= 0.01;
  detail += "general " + Format("%.3f->%.3f", general->baseline_ser,
                                general->variant_ser[rpc]);
  out.reduction = {pass, detail};

  pass = true;
  detail.clear();
  for (const std::string &set : c.entity_sets) {
    for (const char *stratum : {"head", "torso", "tail"}) {
      const ReportRow *row = r1.Find(set, stratum);
      pass &= row->variant_ser[deal_r] <= row->variant_ser[deal];
      detail += set + "/" + stratum +
                Format(" %.3f vs %.3f; ", row->variant_ser[deal], row->variant_ser[deal_r]);
    }
  }
  detail.resize(detail.size() - 2);
  out.ordering = {pass, "DEAL vs DEAL-r: " + detail};

  const std::string one = RescoreAll(data, r1, 1, true);
  const std::string eight = RescoreAll(data, r1, 8, true);
  const std::string eight_fresh = RescoreAll(data, r1, 8, false);
  pass = one == eight && one == eight_fresh && rep1.str() == rep8.str();
  size_t lines = std::count(one.begin(), one.end(), '\n');
  out.parallel = {pass, std::to_string(lines) + " output lines, 1 vs 8 workers " +
                            (one == eight ? "identical" : "differ") +
                            ", shared vs per-utterance cache " +
                            (one == eight_fresh ? "identical" : "differ") +
                            ", reports " + (rep1.str() == rep8.str() ? "identical" : "differ")};
  return out;
}

// 7. Separable perceptron training.
Outcome Perceptron() {
  auto examples = fixture::SeparableExamples();
  auto features = fixture::SeparableFeatures();
  KnowledgeGraph g = fixture::SeparableGraph();
  TrainerConfig c;
  c.epochs = 10;
  c.seed = 42;
  TrainStats s1, s2;
  Model a = Train(examples, features, g, c, &s1);
  Model b = Train(examples, features, g, c, &s2);
  int zero_epoch = -1;
  for (size_t e = 0; e < s1.mistakes_per_epoch.size(); ++e)
    if (s1.mistakes_per_epoch[e] == 0) {
      zero_epoch = static_cast<int>(e) + 1;
      break;
    }
  HypothesisScorer scorer(a, g);
  size_t errors = 0;
  for (const TrainingExample &ex : examples)
    if (RescoreNbest(ex.nbest, scorer)[0].words != ex.reference) ++errors;
  bool identical = std::memcmp(&a.base_weight, &b.base_weight, sizeof(Weight)) == 0;
  for (size_t i = 0; i < a.features.size(); ++i)
    identical &= std::memcmp(&a.features[i].weight, &b.features[i].weight,
                             sizeof(Weight)) == 0;
  Outcome o;
  o.pass = zero_epoch > 0 && errors == 0 && identical;
  std::string mistakes;
  for (int m : s1.mistakes_per_epoch) mistakes += std::to_string(m) + " ";
  o.detail = "mistakes per epoch " + mistakes + "; first clean epoch " +
             std::to_string(zero_epoch) + ", final training errors " +
             std::to_string(errors) + ", reruns " +
             (identical ? "bit-identical" : "differ");
  return o;
}

}  // namespace
}  // namespace kgr

int main() {
  using namespace kgr;
  using Clock = std::chrono::steady_clock;
  int failures = 0;
  auto report = [&](int n, const char *name, const Outcome &o, Clock::time_point t0) {
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("%s %d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", n, name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  };
  auto guard = [](auto fn) -> Outcome {
    try {
      return fn();
    } catch (const std::exception &e) {
      return {false, std::string("exception: ") + e.what()};
    }
  };

  auto t0 = Clock::now();
  std::vector<Instance> instances;
  Outcome o1 = guard([&] {
    instances = RandomInstances(500, 2026);
    return OracleEquivalence(instances);
  });
  report(1, "oracle equivalence", o1, t0);
  t0 = Clock::now();
  report(2, "R_kg structure", guard([&] { return StructuralProperties(instances); }), t0);
  t0 = Clock::now();
  report(3, "R_top construction", guard(ExampleTopology), t0);
  t0 = Clock::now();
  report(4, "lattice correction", guard(LatticeCorrection), t0);

  t0 = Clock::now();
  const auto experiment_t0 = t0;
  ExperimentChecks ex;
  try {
    ex = Experiment();
  } catch (const std::exception &e) {
    ex.reduction = ex.ordering = ex.parallel = {false, std::string("exception: ") + e.what()};
  }
  report(5, "SER reduction", ex.reduction, t0);
  report(6, "relation features", ex.ordering, t0);
  t0 = Clock::now();
  report(7, "perceptron", guard(Perceptron), t0);
  report(8, "parallel determinism", ex.parallel, experiment_t0);
  if (!ex.report.empty()) std::printf("\n%s", ex.report.c_str());
  std::printf("\n%d of 8 criteria failed\n", failures);
  return failures ? 1 : 0;
}
