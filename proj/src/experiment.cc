// src/experiment.cc

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

#include "kgrescore/experiment.h"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <ostream>
#include <set>

#include "kgrescore/compiler.h"

namespace kgr {

namespace {

uint64_t Fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

const PopTier kTiers[] = {PopTier::kHead, PopTier::kTorso, PopTier::kTail};

double TierRate(const ExperimentConfig &c, PopTier t) {
  switch (t) {
    case PopTier::kHead: return c.head_rate;
    case PopTier::kTorso: return c.torso_rate;
    case PopTier::kTail: return c.tail_rate;
  }
  return c.context_rate;
}

std::string Numbered(const std::string &prefix, size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05zu", i);
  return prefix + buf;
}

}  // namespace

std::vector<NoisyUtterance> SynthesizeNoisy(
    const std::vector<Template> &templates, const KnowledgeGraph &graph,
    PopTier tier, size_t n, uint64_t seed, double entity_rate,
    double context_rate, NoiseChannelConfig *channel, SymbolTable *syms) {
  std::vector<NoisyUtterance> out;
  auto samples = SampleUtterances(templates, graph, tier, n, seed);
  const uint64_t noise_seed = DeriveSeed(seed, 0x6e6f697365ULL);
  for (size_t i = 0; i < samples.size(); ++i) {
    SampledUtterance &u = samples[i];
    channel->position_rates.assign(u.words.size(), context_rate);
    for (const EntitySpan &span : u.entities)
      for (size_t k = span.begin; k < span.end; ++k)
        channel->position_rates[k] = entity_rate;
    channel->seed = DeriveSeed(noise_seed, i);
    CorruptResult c = CorruptToLattice(u.words, *channel, syms);
    out.push_back({std::move(u), std::move(c)});
  }
  return out;
}

ConfusionPool DefaultConfusionPool(
    const KnowledgeGraph &graph,
    const std::vector<const std::vector<Template> *> &template_sets,
    const ConfusionPool &extra, int breadth) {
  std::set<std::string> vocab;
  for (const std::string &w : graph.Vocabulary()) vocab.insert(w);
  for (const auto *templates : template_sets)
    for (const Template &t : *templates)
      for (const Token &tok : t.tokens)
        if (!IsNonTerminal(tok)) vocab.insert(std::get<std::string>(tok));
  return BuildConfusionPool(std::vector<std::string>(vocab.begin(), vocab.end()),
                            extra, breadth > 1 ? breadth - 1 : 0);
}

std::vector<FeatureVariant> StandardVariants() {
  return {
      {"DEAL", ExtractOptions{false}, FactorMode::kNone},
      {"DEAL-r", ExtractOptions{true}, FactorMode::kNone},
      {"DEAL-rpc", ExtractOptions{true}, FactorMode::kBoth},
  };
}

ExperimentData PrepareExperiment(const ExperimentConfig &config) {
  if (config.entity_sets.empty()) throw Error("no entity template sets");
  ExperimentData data;
  data.graph = LoadKnowledgeGraph(config.kg_path);
  std::vector<std::string> names = config.entity_sets;
  names.push_back(config.general_set);
  std::vector<const std::vector<Template> *> sets;
  for (const std::string &name : names) {
    auto templates = LoadTemplates(config.templates_dir + "/" + name + ".tsv");
    if (templates.empty()) throw Error("template set '" + name + "' is empty");
    data.templates[name] = std::move(templates);
    sets.push_back(&data.templates[name]);
  }
  for (const Template &t : data.templates[config.general_set])
    if (CountNonTerminals(t.tokens))
      throw Error("general template set must be entity-free");

  ConfusionPool extra;
  if (!config.confusions_path.empty()) extra = LoadConfusions(config.confusions_path);
  NoiseChannelConfig channel;
  channel.breadth = config.breadth;
  channel.nbest = config.nbest;
  channel.pool = DefaultConfusionPool(data.graph, sets, extra, config.breadth);
  channel.Validate();

  // Training: synthesized utterances split evenly over entity sets and
  // strata, plus general utterances.
  SymbolTable train_syms;
  const size_t cells = config.entity_sets.size() * 3;
  size_t cell = 0;
  for (const std::string &name : config.entity_sets) {
    for (PopTier tier : kTiers) {
      size_t n = config.train_synthesized / cells +
                 (cell < config.train_synthesized % cells ? 1 : 0);
      ++cell;
      std::string prefix = "train-" + name + "-" + PopTierName(tier) + "-";
      auto noisy = SynthesizeNoisy(data.templates[name], data.graph, tier, n,
                              DeriveSeed(config.seed, Fnv1a(prefix)),
                              TierRate(config, tier), config.context_rate, &channel,
                              &train_syms);
      for (size_t i = 0; i < noisy.size(); ++i)
        data.train.push_back({Numbered(prefix, i), noisy[i].sample.words,
                              std::move(noisy[i].corrupt.nbest)});
    }
  }
  {
    std::string prefix = "train-" + config.general_set + "-";
    auto noisy = SynthesizeNoisy(data.templates[config.general_set], data.graph,
                            PopTier::kHead, config.train_general,
                            DeriveSeed(config.seed, Fnv1a(prefix)),
                            config.context_rate, config.context_rate, &channel,
                                 &train_syms);
    for (size_t i = 0; i < noisy.size(); ++i)
      data.train.push_back({Numbered(prefix, i), noisy[i].sample.words,
                            std::move(noisy[i].corrupt.nbest)});
  }

  auto add_test = [&](const std::string &name, std::optional<PopTier> tier) {
    TestSet set;
    set.name = name;
    set.stratum = tier ? PopTierName(*tier) : "-";
    std::string prefix = name + "-" + (tier ? set.stratum + "-" : "");
    auto noisy = SynthesizeNoisy(data.templates[name], data.graph,
                            tier.value_or(PopTier::kHead), config.test_size,
                            DeriveSeed(config.seed, Fnv1a("test-" + prefix)),
                            tier ? TierRate(config, *tier) : config.context_rate,
                            config.context_rate, &channel, &data.symbols);
    for (size_t i = 0; i < noisy.size(); ++i)
      set.utterances.push_back({Numbered(prefix, i), noisy[i].sample.words,
                                std::move(noisy[i].corrupt.lattice),
                                std::move(noisy[i].sample.entities),
                                std::move(noisy[i].sample.relations)});
    data.tests.push_back(std::move(set));
  };
  for (const std::string &name : config.entity_sets)
    for (PopTier tier : kTiers) add_test(name, tier);
  add_test(config.general_set, std::nullopt);
  data.pool = std::move(channel.pool);
  return data;
}

std::vector<FeatureNGram> VariantFeatures(const ExperimentData &data,
                                          const FeatureVariant &variant) {
  std::vector<Template> all;
  for (const auto &[name, templates] : data.templates)
    all.insert(all.end(), templates.begin(), templates.end());
  return FactorFeatures(ExtractFeatures(all, variant.extract), variant.factor);
}

std::vector<ScoredHypothesis> RescoreTestSet(const TestSet &set,
                                             const SymbolTable &symbols,
                                             const LatticeRescorer &rescorer,
                                             int workers) {
  std::vector<ScoredHypothesis> out(set.utterances.size());
  std::vector<std::exception_ptr> errors(set.utterances.size());
  ParallelFor(set.utterances.size(), workers, [&](size_t i) {
    try {
      out[i] = rescorer.Rescore(set.utterances[i].lattice, symbols).best;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

const ReportRow *ExperimentResult::Find(const std::string &testset,
                                        const std::string &stratum) const {
  for (const ReportRow &r : rows)
    if (r.testset == testset && r.stratum == stratum) return &r;
  return nullptr;
}

ExperimentResult RunExperiment(const ExperimentConfig &config, std::ostream *log) {
  ExperimentData data = PrepareExperiment(config);
  return RunExperiment(config, data, log);
}

ExperimentResult RunExperiment(const ExperimentConfig &config,
                               const ExperimentData &data, std::ostream *log) {
  ExperimentResult result;
  using WordMap = std::map<std::string, std::vector<std::string>>;
  std::vector<WordMap> refs(data.tests.size());
  for (size_t t = 0; t < data.tests.size(); ++t) {
    const TestSet &set = data.tests[t];
    ReportRow row;
    row.testset = set.name;
    row.stratum = set.stratum;
    row.utterances = set.utterances.size();
    std::set<EntityIndex> entities;
    std::set<std::pair<EntityIndex, EntityIndex>> relations;
    WordMap baseline;
    std::map<std::string, const Wfst *> lattices;
    for (const TestUtterance &u : set.utterances) {
      for (const EntitySpan &s : u.entities) entities.insert(s.entity);
      relations.insert(u.relations.begin(), u.relations.end());
      refs[t][u.id] = u.reference;
      lattices[u.id] = &u.lattice;
      std::vector<std::string> words;
      for (Label l : BestPath(u.lattice, &data.symbols).labels)
        words.push_back(data.symbols.Symbol(l));
      baseline[u.id] = std::move(words);
    }
    row.entities = entities.size();
    row.relations = relations.size();
    EvalReport r = Evaluate(baseline, refs[t], &lattices, &data.symbols);
    row.baseline_ser = r.ser;
    row.oracle_ser = *r.oracle_ser;
    result.rows.push_back(std::move(row));
  }

  for (const FeatureVariant &variant : StandardVariants()) {
    auto features = VariantFeatures(data, variant);
    TrainStats stats;
    Model model = Train(data.train, features, data.graph, config.trainer, &stats);
    if (log) {
      *log << variant.name << ": " << features.size() << " features, "
           << stats.updates << " updates, mistakes per epoch";
      for (int m : stats.mistakes_per_epoch) *log << ' ' << m;
      *log << '\n';
    }
    RTop rtop = BuildRTop(model);
    LatticeRescorer rescorer(model, rtop, data.graph, config.shared_cache);
    for (size_t t = 0; t < data.tests.size(); ++t) {
      const TestSet &set = data.tests[t];
      auto best = RescoreTestSet(set, data.symbols, rescorer, config.workers);
      WordMap out;
      for (size_t i = 0; i < best.size(); ++i)
        out[set.utterances[i].id] = std::move(best[i].words);
      result.rows[t].variant_ser.push_back(Evaluate(out, refs[t]).ser);
    }
    result.variant_names.push_back(variant.name);
    result.models.push_back(std::move(model));
  }
  return result;
}

void WriteReport(const ExperimentResult &result, std::ostream &os) {
  std::vector<std::string> header = {"testset", "stratum", "#utts", "#entities",
                                     "#relations", "baseline SER"};
  for (const std::string &v : result.variant_names) header.push_back(v + " SER");
  header.push_back("oracle SER");
  auto fmt = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", x);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> table = {header};
  for (const ReportRow &r : result.rows) {
    std::vector<std::string> cells = {r.testset, r.stratum,
                                      std::to_string(r.utterances),
                                      std::to_string(r.entities),
                                      std::to_string(r.relations),
                                      fmt(r.baseline_ser)};
    for (double s : r.variant_ser) cells.push_back(fmt(s));
    cells.push_back(fmt(r.oracle_ser));
    table.push_back(std::move(cells));
  }
  std::vector<size_t> width(header.size(), 0);
  for (const auto &row : table)
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  for (const auto &row : table) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) os << "  ";
      // Text columns left-aligned, numbers right-aligned.
      if (c < 2)
        os << row[c] << std::string(width[c] - row[c].size(), ' ');
      else
        os << std::string(width[c] - row[c].size(), ' ') << row[c];
    }
    os << '\n';
  }
}

}  // namespace kgr
