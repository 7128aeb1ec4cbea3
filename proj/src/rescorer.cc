// src/rescorer.cc

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

#include "kgrescore/rescorer.h"

#include <algorithm>
#include <set>

namespace kgr {

Weight TotalScore(const Model &model, Weight base_score,
                  const std::map<int, int> &counts) {
  Weight total = model.base_weight * base_score;
  for (const auto &[id, c] : counts) total += model.FeatureWeight(id) * c;
  return total;
}

// ---------------------------------------------------------------------------

HypothesisScorer::HypothesisScorer(const Model &model,
                                   const KnowledgeGraph &graph)
    : model_(model), graph_(graph) {
  for (size_t i = 0; i < model.features.size(); ++i) {
    const Token &first = model.features[i].tokens.front();
    if (IsNonTerminal(first))
      by_first_nonterminal_.push_back(static_cast<int>(i));
    else
      by_first_word_[std::get<std::string>(first)].push_back(static_cast<int>(i));
  }
}

namespace {

struct Span {
  int length;
  const std::vector<EntityIndex> *entities;
};

class Matcher {
 public:
  Matcher(const KnowledgeGraph &graph, const std::vector<std::string> &padded,
          const std::vector<std::vector<Span>> &spans)
      : graph_(graph), padded_(padded), spans_(spans) {}

  int Count(const std::vector<Token> &tokens, size_t start) {
    tokens_ = &tokens;
    bindings_.clear();
    return Match(0, start, 1);
  }

 private:
  int Match(size_t k, size_t j, int nt_pos) {
    const auto &tokens = *tokens_;
    if (k == tokens.size()) return 1;
    if (!IsNonTerminal(tokens[k])) {
      if (j < padded_.size() && padded_[j] == std::get<std::string>(tokens[k]))
        return Match(k + 1, j + 1, nt_pos);
      return 0;
    }
    const auto &spec = std::get<NonTerminalSpec>(tokens[k]);
    if (j >= padded_.size() || !graph_.HasType(spec.type_name)) return 0;
    int total = 0;
    for (const Span &sp : spans_[j]) {
      if (spec.min_word_count && sp.length < *spec.min_word_count) continue;
      std::set<EntityIndex> ok;
      for (EntityIndex e : *sp.entities)
        if (EntitySatisfies(graph_, e, spec, bindings_)) ok.insert(e);
      if (ok.empty()) continue;
      bindings_[nt_pos] = std::move(ok);
      total += Match(k + 1, j + sp.length, nt_pos + 1);
      bindings_.erase(nt_pos);
    }
    return total;
  }

  const KnowledgeGraph &graph_;
  const std::vector<std::string> &padded_;
  const std::vector<std::vector<Span>> &spans_;
  const std::vector<Token> *tokens_ = nullptr;
  Bindings bindings_;
};

}  // namespace

std::map<int, int> HypothesisScorer::Count(
    const std::vector<std::string> &words) const {
  std::vector<std::string> padded;
  padded.reserve(words.size() + 2);
  padded.emplace_back(kBos);
  padded.insert(padded.end(), words.begin(), words.end());
  padded.emplace_back(kEos);
  const size_t n = padded.size();
  std::vector<std::vector<Span>> spans(n);
  for (size_t i = 0; i < n; ++i) {
    std::string surface;
    for (size_t len = 1; len <= static_cast<size_t>(graph_.MaxNameWords()) &&
                         i + len <= n;
         ++len) {
      if (len > 1) surface += ' ';
      surface += padded[i + len - 1];
      const auto &ents = graph_.WithSurface(surface);
      if (!ents.empty())
        spans[i].push_back(Span{static_cast<int>(len), &ents});
    }
  }
  Matcher matcher(graph_, padded, spans);
  std::map<int, int> counts;
  auto run = [&](int fi, size_t i) {
    const FeatureNGram &f = model_.features[fi];
    int c = matcher.Count(f.tokens, i);
    if (c) counts[f.id] += c;
  };
  for (size_t i = 0; i < n; ++i) {
    auto it = by_first_word_.find(padded[i]);
    if (it != by_first_word_.end())
      for (int fi : it->second) run(fi, i);
    if (!spans[i].empty())
      for (int fi : by_first_nonterminal_) run(fi, i);
  }
  return counts;
}

ScoredHypothesis HypothesisScorer::Score(const std::vector<std::string> &words,
                                         Weight base_score) const {
  ScoredHypothesis h;
  h.words = words;
  h.base_score = base_score;
  h.feature_counts = Count(words);
  h.total = TotalScore(model_, base_score, h.feature_counts);
  return h;
}

ScoredHypothesis ScoreHypothesis(const std::vector<std::string> &words,
                                 Weight base_score, const Model &model,
                                 const KnowledgeGraph &graph) {
  return HypothesisScorer(model, graph).Score(words, base_score);
}

std::vector<ScoredHypothesis> RescoreNbest(
    const std::vector<std::pair<std::vector<std::string>, Weight>> &hyps,
    const HypothesisScorer &scorer) {
  if (hyps.empty()) throw Error("RescoreNbest: empty n-best list");
  std::vector<ScoredHypothesis> out;
  out.reserve(hyps.size());
  for (const auto &[words, base] : hyps) out.push_back(scorer.Score(words, base));
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredHypothesis &a, const ScoredHypothesis &b) {
                     return a.total > b.total;
                   });
  return out;
}

std::vector<ScoredHypothesis> RescoreNbest(
    const std::vector<std::pair<std::vector<std::string>, Weight>> &hyps,
    const Model &model, const KnowledgeGraph &graph) {
  return RescoreNbest(hyps, HypothesisScorer(model, graph));
}

// ---------------------------------------------------------------------------

namespace {

Weight SortedSum(std::vector<Weight> *w) {
  std::sort(w->begin(), w->end());
  Weight sum = 0;
  for (Weight x : *w) sum += x;
  return sum;
}

}  // namespace

Rdet::Rdet(RkgFst &rkg) : rkg_(rkg) {
  rkg_start_ = rkg_.Start();
  auto [subset, w] = Closure({rkg_start_});
  if (w != 0) throw Error("Rdet: feature exits reachable without input");
  start_ = Intern(std::move(subset));
}

StateId Rdet::Start() { return start_; }

std::optional<Weight> Rdet::Final(StateId s) {
  std::vector<StateId> subset = Subset(s);
  if (std::binary_search(subset.begin(), subset.end(), rkg_start_))
    return rkg_.Final(rkg_start_);
  return std::nullopt;
}

std::vector<StateId> Rdet::Subset(StateId s) const {
  std::lock_guard<std::mutex> lock(mu_);
  return subsets_.at(s);
}

size_t Rdet::NumStates() const {
  std::lock_guard<std::mutex> lock(mu_);
  return subsets_.size();
}

StateId Rdet::Intern(std::vector<StateId> subset) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = ids_.find(subset);
  if (it != ids_.end()) return it->second;
  StateId id = static_cast<StateId>(subsets_.size());
  subsets_.push_back(subset);
  ids_.emplace(std::move(subset), id);
  return id;
}

std::pair<std::vector<StateId>, Weight> Rdet::Closure(
    std::vector<StateId> seeds) {
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  std::set<StateId> seen(seeds.begin(), seeds.end());
  std::vector<StateId> stack(seeds.begin(), seeds.end());
  std::vector<Weight> exits;
  std::vector<Arc> arcs;
  while (!stack.empty()) {
    StateId s = stack.back();
    stack.pop_back();
    arcs.clear();
    rkg_.TagArcs(s, &arcs);
    for (const Arc &a : arcs) {
      if (IsEndTag(a.olabel)) exits.push_back(a.weight);
      if (seen.insert(a.next).second) stack.push_back(a.next);
    }
  }
  return {std::vector<StateId>(seen.begin(), seen.end()), SortedSum(&exits)};
}

std::optional<std::pair<Weight, StateId>> Rdet::Step(StateId s, Label word) {
  const uint64_t key = (static_cast<uint64_t>(s) << 32) |
                       static_cast<uint32_t>(word);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = arcs_.find(key);
    if (it != arcs_.end()) {
      if (it->second.second == kNoState) return std::nullopt;
      return it->second;
    }
  }
  std::vector<Arc> matched;
  for (StateId m : Subset(s)) rkg_.MatchWord(m, word, &matched);
  std::pair<Weight, StateId> result{0, kNoState};
  if (!matched.empty()) {
    std::vector<StateId> dests;
    std::vector<Weight> weights;
    for (const Arc &a : matched) {
      dests.push_back(a.next);
      if (a.weight != 0) weights.push_back(a.weight);
    }
    auto [subset, exit_weight] = Closure(std::move(dests));
    weights.push_back(exit_weight);
    result = {SortedSum(&weights), Intern(std::move(subset))};
  }
  std::lock_guard<std::mutex> lock(mu_);
  arcs_.emplace(key, result);
  if (result.second == kNoState) return std::nullopt;
  return result;
}

void Rdet::Match(StateId s, Label label, std::vector<Arc> *arcs) {
  if (auto step = Step(s, label))
    arcs->push_back(Arc{label, label, step->first, step->second});
}

// ---------------------------------------------------------------------------

namespace {

// Presents R_det in the lattice's label space.
class RelabelMatchFst : public MatchFst {
 public:
  RelabelMatchFst(MatchFst &inner, const std::unordered_map<Label, Label> &map)
      : inner_(inner), map_(map) {}
  StateId Start() override { return inner_.Start(); }
  std::optional<Weight> Final(StateId s) override { return inner_.Final(s); }
  void Match(StateId s, Label label, std::vector<Arc> *arcs) override {
    size_t before = arcs->size();
    inner_.Match(s, map_.at(label), arcs);
    for (size_t i = before; i < arcs->size(); ++i)
      (*arcs)[i].ilabel = (*arcs)[i].olabel = label;
  }

 private:
  MatchFst &inner_;
  const std::unordered_map<Label, Label> &map_;
};

}  // namespace

LatticeRescorer::LatticeRescorer(const Model &model, const RTop &rtop,
                                 const KnowledgeGraph &graph, bool shared_cache)
    : model_(model),
      context_(std::make_unique<ExpansionContext>(rtop, graph)),
      scorer_(model, graph) {
  if (shared_cache) {
    shared_rkg_ = std::make_unique<RkgFst>(*context_);
    shared_rdet_ = std::make_unique<Rdet>(*shared_rkg_);
  }
}

RescoreResult LatticeRescorer::Rescore(const Wfst &lattice,
                                       const SymbolTable &symbols) const {
  if (lattice.Empty()) throw Error("empty lattice");
  lattice.Validate();
  if (!IsAcyclic(lattice)) throw Error("lattice is cyclic");

  RescoreResult res;
  res.symbols = symbols;
  const Label bos = res.symbols.AddSymbol(kBos);
  const Label eos = res.symbols.AddSymbol(kEos);

  // Lattice label -> model label; unknown words get labels past the model's
  // range so that only sigma accepts them.
  std::unordered_map<Label, Label> to_model;
  std::set<std::string> unknown;
  const Label fresh_base = context_->symbols().NextWordLabel();
  auto map_label = [&](Label l) {
    if (to_model.count(l)) return;
    if (l < kFirstWordLabel || IsEndTag(l))
      throw Error("lattice uses reserved label " + std::to_string(l));
    const std::string &w = res.symbols.Symbol(l);
    if (auto m = context_->WordLabel(w)) {
      to_model.emplace(l, *m);
    } else {
      unknown.insert(w);
      to_model.emplace(l, fresh_base + l);
    }
  };
  map_label(bos);
  map_label(eos);

  // Boundary-padded copies: unscaled (for the base score) and scaled by w0.
  Wfst padded;
  for (StateId s = 0; s < lattice.NumStates(); ++s) padded.AddState();
  const StateId start = padded.AddState(), final = padded.AddState();
  padded.SetStart(start);
  padded.SetFinal(final, 0);
  padded.AddArc(start, Arc{bos, bos, 0, lattice.Start()});
  for (StateId s = 0; s < lattice.NumStates(); ++s) {
    for (const Arc &a : lattice.Arcs(s)) {
      if (a.ilabel != a.olabel) throw Error("lattice must be an acceptor");
      map_label(a.ilabel);
      padded.AddArc(s, a);
    }
    if (auto f = lattice.Final(s)) padded.AddArc(s, Arc{eos, eos, *f, final});
  }
  Wfst scaled = padded;
  for (StateId s = 0; s < scaled.NumStates(); ++s)
    for (Arc &a : scaled.MutableArcs(s)) a.weight *= model_.base_weight;

  std::unique_ptr<RkgFst> rkg;
  std::unique_ptr<Rdet> rdet;
  Rdet *det = shared_rdet_.get();
  if (!det) {
    rkg = std::make_unique<RkgFst>(*context_);
    rdet = std::make_unique<Rdet>(*rkg);
    det = rdet.get();
  }
  RelabelMatchFst rhs(*det, to_model);
  ComposeResult comp = Compose(scaled, rhs);
  if (comp.fst.Empty()) throw Error("rescored lattice has no complete path");

  Path best = BestPath(comp.fst, &res.symbols);
  Weight base = 0;
  for (auto [s, i] : best.arcs) {
    StateId ls = comp.origin[s].first;
    base += padded.Arcs(ls)[comp.lattice_arc[s][i]].weight;
  }
  for (Label l : best.labels)
    if (l != bos && l != eos) res.best.words.push_back(res.symbols.Symbol(l));
  res.best.base_score = base;
  res.best.feature_counts = scorer_.Count(res.best.words);
  res.best.total = best.weight;
  res.rescored = std::move(comp.fst);
  res.unknown_words.assign(unknown.begin(), unknown.end());
  return res;
}

RescoreResult RescoreLattice(const Wfst &lattice, const SymbolTable &symbols,
                             const Model &model, const RTop &rtop,
                             const KnowledgeGraph &graph) {
  return LatticeRescorer(model, rtop, graph).Rescore(lattice, symbols);
}

}  // namespace kgr
