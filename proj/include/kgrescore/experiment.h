// kgrescore/experiment.h

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

#ifndef KGRESCORE_EXPERIMENT_H_
#define KGRESCORE_EXPERIMENT_H_

// End-to-end desk experiment: synthesize training and test data from the toy
// graph, train the feature-set variants, rescore the test lattices and report
// sentence error rates per test set and stratum.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgrescore/features.h"
#include "kgrescore/fst.h"
#include "kgrescore/kg.h"
#include "kgrescore/rescorer.h"
#include "kgrescore/symbol_table.h"
#include "kgrescore/synth.h"
#include "kgrescore/trainer.h"

namespace kgr {

struct ExperimentConfig {
  std::string kg_path = "data/toy_kg.json";
  /// Holds one <name>.tsv per template set; "general" must be entity-free.
  std::string templates_dir = "data/templates";
  std::vector<std::string> entity_sets = {"city_state", "title_artist"};
  std::string general_set = "general";
  std::string confusions_path = "data/confusions.tsv";  // extra pairs; empty for none
  uint64_t seed = 2026;
  size_t train_synthesized = 2000;
  size_t train_general = 7000;
  size_t test_size = 500;
  double context_rate = 0.03;
  double head_rate = 0.15;
  double torso_rate = 0.3;
  double tail_rate = 0.45;
  int breadth = 3;
  int nbest = 10;
  TrainerConfig trainer;
  int workers = 1;
  bool shared_cache = true;
};

struct FeatureVariant {
  std::string name;
  ExtractOptions extract;
  FactorMode factor = FactorMode::kNone;
};

struct NoisyUtterance {
  SampledUtterance sample;
  CorruptResult corrupt;
};

/// Samples `n` utterances and passes each through `channel`.  Words inside
/// entity spans use `entity_rate`, the others `context_rate`; utterance i uses
/// a channel seed derived from `seed` and i.
std::vector<NoisyUtterance> SynthesizeNoisy(
    const std::vector<Template> &templates, const KnowledgeGraph &graph,
    PopTier tier, size_t n, uint64_t seed, double entity_rate,
    double context_rate, NoiseChannelConfig *channel, SymbolTable *syms);

/// Confusion pool over the graph vocabulary and the literal template words,
/// padded to breadth - 1 alternatives per word.
ConfusionPool DefaultConfusionPool(
    const KnowledgeGraph &graph,
    const std::vector<const std::vector<Template> *> &template_sets,
    const ConfusionPool &extra, int breadth);

/// DEAL (entity types only), DEAL-r (plus relations) and DEAL-rpc (plus
/// relations, popularity and word-count factors).
std::vector<FeatureVariant> StandardVariants();

struct TestUtterance {
  std::string id;
  std::vector<std::string> reference;
  Wfst lattice;
  std::vector<EntitySpan> entities;
  std::vector<std::pair<EntityIndex, EntityIndex>> relations;
};

struct TestSet {
  std::string name;
  std::string stratum;  // "-" for the general set
  std::vector<TestUtterance> utterances;
};

struct ExperimentData {
  KnowledgeGraph graph;
  std::map<std::string, std::vector<Template>> templates;
  ConfusionPool pool;
  SymbolTable symbols;  // shared by all test lattices
  std::vector<TrainingExample> train;
  std::vector<TestSet> tests;
};

/// Loads inputs and synthesizes every training and test utterance.
/// Deterministic in config.seed.
ExperimentData PrepareExperiment(const ExperimentConfig &config);

/// Feature set of `variant` extracted from every template set.
std::vector<FeatureNGram> VariantFeatures(const ExperimentData &data,
                                          const FeatureVariant &variant);

/// Best rescored hypothesis per utterance of `set`, in utterance order.
std::vector<ScoredHypothesis> RescoreTestSet(const TestSet &set,
                                             const SymbolTable &symbols,
                                             const LatticeRescorer &rescorer,
                                             int workers);

struct ReportRow {
  std::string testset;
  std::string stratum;
  size_t utterances = 0;
  size_t entities = 0;   // distinct entities
  size_t relations = 0;  // distinct related pairs
  double baseline_ser = 0;
  std::vector<double> variant_ser;  // StandardVariants() order
  double oracle_ser = 0;
};

struct ExperimentResult {
  std::vector<std::string> variant_names;
  std::vector<Model> models;
  std::vector<ReportRow> rows;
  const ReportRow *Find(const std::string &testset,
                        const std::string &stratum) const;
};

/// Runs the whole experiment; progress goes to `log` when given.
ExperimentResult RunExperiment(const ExperimentConfig &config,
                               std::ostream *log = nullptr);
ExperimentResult RunExperiment(const ExperimentConfig &config,
                               const ExperimentData &data,
                               std::ostream *log = nullptr);

/// Aligned text table: testset, stratum, #utts, #entities, #relations,
/// baseline SER, one SER column per variant, oracle SER.
void WriteReport(const ExperimentResult &result, std::ostream &os);

}  // namespace kgr

#endif  // KGRESCORE_EXPERIMENT_H_
