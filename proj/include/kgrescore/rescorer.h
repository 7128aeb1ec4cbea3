// kgrescore/rescorer.h

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

#ifndef KGRESCORE_RESCORER_H_
#define KGRESCORE_RESCORER_H_

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgrescore/compiler.h"
#include "kgrescore/expander.h"
#include "kgrescore/features.h"
#include "kgrescore/fst.h"
#include "kgrescore/kg.h"

namespace kgr {

struct ScoredHypothesis {
  std::vector<std::string> words;
  Weight base_score = 0;
  std::map<int, int> feature_counts;  // only nonzero counts
  Weight total = 0;
};

/// Recomputes w0 * base + sum_f w_f * count_f, in feature-id order.
Weight TotalScore(const Model &model, Weight base_score,
                  const std::map<int, int> &counts);

/// Direct feature matcher.  For every start offset of `<s> words </s>` and
/// every assignment of entity surfaces to the non-terminals that spells the
/// span, one occurrence is counted.  Non-terminals are resolved through the
/// graph's surface index.  Thread-safe.
class HypothesisScorer {
 public:
  HypothesisScorer(const Model &model, const KnowledgeGraph &graph);

  std::map<int, int> Count(const std::vector<std::string> &words) const;
  ScoredHypothesis Score(const std::vector<std::string> &words,
                         Weight base_score) const;
  const Model &model() const { return model_; }

 private:
  const Model &model_;
  const KnowledgeGraph &graph_;
  std::unordered_map<std::string, std::vector<int>> by_first_word_;
  std::vector<int> by_first_nonterminal_;
};

ScoredHypothesis ScoreHypothesis(const std::vector<std::string> &words,
                                 Weight base_score, const Model &model,
                                 const KnowledgeGraph &graph);

/// Scores every hypothesis and sorts by total, descending; ties keep the
/// input order.  Throws on an empty list.
std::vector<ScoredHypothesis> RescoreNbest(
    const std::vector<std::pair<std::vector<std::string>, Weight>> &hyps,
    const HypothesisScorer &scorer);
std::vector<ScoredHypothesis> RescoreNbest(
    const std::vector<std::pair<std::vector<std::string>, Weight>> &hyps,
    const Model &model, const KnowledgeGraph &graph);

/// On-demand determinization of R_kg.  A state is a sorted set of R_kg states
/// closed under <f> entries and eps:<#id> exits.  Stepping on a word collects
/// the matching word and sigma arcs of all members, closes the destinations
/// and weighs the new arc with the sum of the exits taken during the closure.
/// One instance may be shared across threads.
class Rdet : public MatchFst {
 public:
  explicit Rdet(RkgFst &rkg);

  StateId Start() override;
  std::optional<Weight> Final(StateId s) override;
  void Match(StateId s, Label label, std::vector<Arc> *arcs) override;

  /// The unique arc on `word`, if any, as (weight, next state).
  std::optional<std::pair<Weight, StateId>> Step(StateId s, Label word);
  std::vector<StateId> Subset(StateId s) const;
  size_t NumStates() const;

 private:
  // Closes `seeds` and returns (subset, summed exit weight).
  std::pair<std::vector<StateId>, Weight> Closure(std::vector<StateId> seeds);
  StateId Intern(std::vector<StateId> subset);

  RkgFst &rkg_;
  StateId rkg_start_;
  StateId start_;
  mutable std::mutex mu_;
  std::vector<std::vector<StateId>> subsets_;
  std::map<std::vector<StateId>, StateId> ids_;
  std::unordered_map<uint64_t, std::pair<Weight, StateId>> arcs_;
};

struct RescoreResult {
  ScoredHypothesis best;
  /// Composition of the scaled, boundary-padded lattice with R_det, over
  /// `symbols` (the lattice's table plus "<s>" and "</s>").
  Wfst rescored;
  SymbolTable symbols;
  /// Lattice words unknown to the model and graph; they match only sigma.
  std::vector<std::string> unknown_words;
};

/// Rescores lattices against one (model, R_top, graph) triple.  Rescore() may
/// be called concurrently.  With `shared_cache`, the expanded and determinized
/// automata persist across calls; otherwise each call builds its own.
class LatticeRescorer {
 public:
  LatticeRescorer(const Model &model, const RTop &rtop,
                  const KnowledgeGraph &graph, bool shared_cache = false);

  /// `lattice` is an epsilon-free acyclic acceptor over `symbols` whose path
  /// weights are base scores.  Throws on an empty lattice.
  RescoreResult Rescore(const Wfst &lattice, const SymbolTable &symbols) const;

  ExpansionContext &context() const { return *context_; }
  const HypothesisScorer &scorer() const { return scorer_; }

 private:
  const Model &model_;
  std::unique_ptr<ExpansionContext> context_;
  HypothesisScorer scorer_;
  std::unique_ptr<RkgFst> shared_rkg_;
  std::unique_ptr<Rdet> shared_rdet_;
};

RescoreResult RescoreLattice(const Wfst &lattice, const SymbolTable &symbols,
                             const Model &model, const RTop &rtop,
                             const KnowledgeGraph &graph);

}  // namespace kgr

#endif  // KGRESCORE_RESCORER_H_
