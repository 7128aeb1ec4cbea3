// src/fst.cc

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

#include "kgrescore/fst.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <queue>
#include <string>

namespace kgr {

bool ArcLess(const Arc &a, const Arc &b) {
  return std::tie(a.ilabel, a.olabel, a.weight, a.next) <
         std::tie(b.ilabel, b.olabel, b.weight, b.next);
}

StateId Wfst::AddState() {
  states_.emplace_back();
  return static_cast<StateId>(states_.size() - 1);
}

void Wfst::SetStart(StateId s) {
  if (s < 0 || s >= NumStates()) throw Error("start state out of range");
  start_ = s;
}

void Wfst::SetFinal(StateId s, Weight w) { states_.at(s).final = w; }

void Wfst::ClearFinal(StateId s) { states_.at(s).final.reset(); }

void Wfst::AddArc(StateId src, const Arc &arc) {
  states_.at(src).arcs.push_back(arc);
}

size_t Wfst::NumArcs() const {
  size_t n = 0;
  for (const auto &s : states_) n += s.arcs.size();
  return n;
}

void Wfst::SortArcs() {
  for (auto &s : states_) std::sort(s.arcs.begin(), s.arcs.end(), ArcLess);
}

void Wfst::Validate() const {
  if (start_ != kNoState && (start_ < 0 || start_ >= NumStates()))
    throw Error("invalid start state");
  for (StateId s = 0; s < NumStates(); ++s)
    for (const Arc &a : states_[s].arcs)
      if (a.next < 0 || a.next >= NumStates())
        throw Error("arc from state " + std::to_string(s) +
                    " targets invalid state " + std::to_string(a.next));
}

// ---------------------------------------------------------------------------

void WriteFstText(const Wfst &fst, std::ostream &os) {
  if (fst.Empty()) return;
  if (fst.Start() != 0)
    throw Error("WriteFstText: start state must be 0; canonicalize first");
  for (StateId s = 0; s < fst.NumStates(); ++s) {
    for (const Arc &a : fst.Arcs(s))
      os << s << '\t' << a.next << '\t' << a.ilabel << '\t' << a.olabel << '\t'
         << FormatWeight(a.weight) << '\n';
    if (auto f = fst.Final(s)) os << s << '\t' << FormatWeight(*f) << '\n';
  }
}

Wfst ReadFstText(std::istream &is) {
  Wfst fst;
  auto ensure = [&fst](long s) {
    if (s < 0) throw ParseError("negative state id");
    while (fst.NumStates() <= s) fst.AddState();
  };
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (TrimView(line).empty()) continue;
    auto f = SplitTabs(line);
    try {
      if (f.size() == 5) {
        long src = ParseInt(f[0]), dst = ParseInt(f[1]);
        ensure(std::max(src, dst));
        fst.AddArc(static_cast<StateId>(src),
                   Arc{static_cast<Label>(ParseInt(f[2])),
                       static_cast<Label>(ParseInt(f[3])), ParseWeight(f[4]),
                       static_cast<StateId>(dst)});
      } else if (f.size() == 1 || f.size() == 2) {
        long s = ParseInt(f[0]);
        ensure(s);
        fst.SetFinal(static_cast<StateId>(s),
                     f.size() == 2 ? ParseWeight(f[1]) : 0.0);
      } else {
        throw ParseError("expected 5 (arc) or 1-2 (final) fields");
      }
    } catch (const ParseError &e) {
      throw ParseError("fst line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (fst.NumStates() > 0) fst.SetStart(0);
  return fst;
}

// ---------------------------------------------------------------------------

namespace {

// 0 = unvisited, 1 = on stack, 2 = done.  Iterative DFS; returns the
// post-order and sets `cyclic` when a back edge is found.
std::vector<StateId> PostOrder(const Wfst &fst, bool *cyclic) {
  std::vector<StateId> order;
  *cyclic = false;
  if (fst.Empty()) return order;
  std::vector<char> color(fst.NumStates(), 0);
  std::vector<std::pair<StateId, size_t>> stack{{fst.Start(), 0}};
  color[fst.Start()] = 1;
  while (!stack.empty()) {
    auto &[s, i] = stack.back();
    auto arcs = fst.Arcs(s);
    if (i < arcs.size()) {
      StateId n = arcs[i++].next;
      if (color[n] == 1) {
        *cyclic = true;
      } else if (color[n] == 0) {
        color[n] = 1;
        stack.emplace_back(n, 0);
      }
    } else {
      color[s] = 2;
      order.push_back(s);
      stack.pop_back();
    }
  }
  return order;
}

std::vector<char> Accessible(const Wfst &fst) {
  std::vector<char> acc(fst.NumStates(), 0);
  if (fst.Empty()) return acc;
  std::vector<StateId> stack{fst.Start()};
  acc[fst.Start()] = 1;
  while (!stack.empty()) {
    StateId s = stack.back();
    stack.pop_back();
    for (const Arc &a : fst.Arcs(s))
      if (!acc[a.next]) {
        acc[a.next] = 1;
        stack.push_back(a.next);
      }
  }
  return acc;
}

std::vector<char> Coaccessible(const Wfst &fst) {
  std::vector<std::vector<StateId>> rev(fst.NumStates());
  for (StateId s = 0; s < fst.NumStates(); ++s)
    for (const Arc &a : fst.Arcs(s)) rev[a.next].push_back(s);
  std::vector<char> co(fst.NumStates(), 0);
  std::vector<StateId> stack;
  for (StateId s = 0; s < fst.NumStates(); ++s)
    if (fst.IsFinal(s)) {
      co[s] = 1;
      stack.push_back(s);
    }
  while (!stack.empty()) {
    StateId s = stack.back();
    stack.pop_back();
    for (StateId p : rev[s])
      if (!co[p]) {
        co[p] = 1;
        stack.push_back(p);
      }
  }
  return co;
}

// Keeps states with keep[s] set, preserving relative order.
Wfst Compact(const Wfst &fst, const std::vector<char> &keep) {
  std::vector<StateId> remap(fst.NumStates(), kNoState);
  Wfst out;
  for (StateId s = 0; s < fst.NumStates(); ++s)
    if (keep[s]) remap[s] = out.AddState();
  for (StateId s = 0; s < fst.NumStates(); ++s) {
    if (!keep[s]) continue;
    for (const Arc &a : fst.Arcs(s))
      if (keep[a.next]) {
        Arc b = a;
        b.next = remap[a.next];
        out.AddArc(remap[s], b);
      }
    if (auto f = fst.Final(s)) out.SetFinal(remap[s], *f);
  }
  if (!fst.Empty() && keep[fst.Start()]) out.SetStart(remap[fst.Start()]);
  return out;
}

uint64_t WeightBits(Weight w) {
  if (w == 0.0) w = 0.0;  // fold -0
  return std::bit_cast<uint64_t>(w);
}

}  // namespace

bool IsAcyclic(const Wfst &fst) {
  bool cyclic = false;
  PostOrder(fst, &cyclic);
  return !cyclic;
}

std::vector<StateId> TopologicalOrder(const Wfst &fst) {
  bool cyclic = false;
  auto order = PostOrder(fst, &cyclic);
  if (cyclic) throw Error("automaton is cyclic");
  std::reverse(order.begin(), order.end());
  return order;
}

Wfst Trim(const Wfst &fst) {
  auto acc = Accessible(fst);
  auto co = Coaccessible(fst);
  std::vector<char> keep(fst.NumStates());
  for (StateId s = 0; s < fst.NumStates(); ++s) keep[s] = acc[s] && co[s];
  return Compact(fst, keep);
}

Wfst Canonicalize(const Wfst &input) {
  Wfst fst = Trim(input);
  Wfst out;
  if (fst.Empty()) return out;
  std::vector<StateId> remap(fst.NumStates(), kNoState);
  std::deque<StateId> queue{fst.Start()};
  remap[fst.Start()] = out.AddState();
  out.SetStart(0);
  while (!queue.empty()) {
    StateId s = queue.front();
    queue.pop_front();
    std::vector<Arc> arcs(fst.Arcs(s).begin(), fst.Arcs(s).end());
    std::stable_sort(arcs.begin(), arcs.end(), [](const Arc &a, const Arc &b) {
      return std::tie(a.ilabel, a.olabel, a.weight) <
             std::tie(b.ilabel, b.olabel, b.weight);
    });
    for (const Arc &a : arcs) {
      if (remap[a.next] == kNoState) {
        remap[a.next] = out.AddState();
        queue.push_back(a.next);
      }
      out.AddArc(remap[s], Arc{a.ilabel, a.olabel, a.weight, remap[a.next]});
    }
    if (auto f = fst.Final(s)) out.SetFinal(remap[s], *f);
  }
  return out;
}

// ---------------------------------------------------------------------------

Label EncodeTable::Encode(Label ilabel, Label olabel, Weight weight) {
  auto key = std::make_tuple(ilabel, olabel, WeightBits(weight));
  auto it = codes_.find(key);
  if (it != codes_.end()) return it->second;
  if (triples_.size() >= kCodesPerTable)
    throw Error("encode table is full");
  triples_.emplace_back(ilabel, olabel, weight == 0.0 ? 0.0 : weight);
  Label code = base_ + static_cast<Label>(triples_.size()) - 1;
  codes_.emplace(key, code);
  return code;
}

std::tuple<Label, Label, Weight> EncodeTable::Decode(Label code) const {
  if (code < base_ || static_cast<size_t>(code - base_) >= triples_.size())
    throw Error("code " + std::to_string(code) +
                " does not belong to this encode table");
  return triples_[code - base_];
}

EncodeResult Encode(const Wfst &fst) {
  static std::atomic<uint64_t> next_id{1};
  auto table = std::make_shared<EncodeTable>();
  table->id_ = next_id++;
  // Tables get disjoint code ranges so that a foreign table is detected.
  table->base_ = 1 + static_cast<Label>((table->id_ % 1000) * EncodeTable::kCodesPerTable);
  EncodeResult res;
  Wfst &out = res.fst;
  for (StateId s = 0; s < fst.NumStates(); ++s) out.AddState();
  bool any_final = false;
  for (StateId s = 0; s < fst.NumStates(); ++s) any_final |= fst.IsFinal(s);
  if (any_final) {
    res.super_final = out.AddState();
    out.SetFinal(res.super_final, 0);
  }
  for (StateId s = 0; s < fst.NumStates(); ++s) {
    for (const Arc &a : fst.Arcs(s)) {
      Label code = table->Encode(a.ilabel, a.olabel, a.weight);
      out.AddArc(s, Arc{code, code, 0, a.next});
    }
    if (auto f = fst.Final(s)) {
      Label code = table->Encode(EncodeTable::kFinalMarker,
                                 EncodeTable::kFinalMarker, *f);
      out.AddArc(s, Arc{code, code, 0, res.super_final});
    }
  }
  if (!fst.Empty()) out.SetStart(fst.Start());
  res.table = std::move(table);
  return res;
}

Wfst Decode(const Wfst &fst, const EncodeResult &encoded) {
  const EncodeTable &table = *encoded.table;
  Wfst out;
  for (StateId s = 0; s < fst.NumStates(); ++s) out.AddState();
  // States entered only through final-marker arcs are super-final copies.
  // A state with several distinct final weights (possible after subset
  // construction) keeps them as epsilon arcs into the super-final state.
  std::vector<char> plain_target(fst.NumStates(), 0),
      marker_target(fst.NumStates(), 0), kept_target(fst.NumStates(), 0);
  if (!fst.Empty()) plain_target[fst.Start()] = 1;
  for (StateId s = 0; s < fst.NumStates(); ++s) {
    std::vector<std::pair<Weight, StateId>> finals;
    for (const Arc &a : fst.Arcs(s)) {
      if (a.ilabel != a.olabel)
        throw Error("Decode: input is not an encoded acceptor");
      auto [il, ol, w] = table.Decode(a.ilabel);
      if (il == EncodeTable::kFinalMarker) {
        finals.emplace_back(w, a.next);
        marker_target[a.next] = 1;
      } else {
        out.AddArc(s, Arc{il, ol, w, a.next});
        plain_target[a.next] = 1;
      }
    }
    std::sort(finals.begin(), finals.end());
    finals.erase(std::unique(finals.begin(), finals.end()), finals.end());
    if (finals.size() == 1) {
      out.SetFinal(s, finals[0].first);
    } else {
      for (auto [w, t] : finals) {
        out.AddArc(s, Arc{kEpsilon, kEpsilon, w, t});
        kept_target[t] = 1;
        out.SetFinal(t, 0);
      }
    }
  }
  std::vector<char> keep(fst.NumStates(), 1);
  for (StateId s = 0; s < fst.NumStates(); ++s)
    if (marker_target[s] && !plain_target[s] && !kept_target[s] &&
        fst.Arcs(s).empty())
      keep[s] = 0;
  if (!fst.Empty()) out.SetStart(fst.Start());
  return Compact(out, keep);
}

Wfst DeterminizeEncoded(const Wfst &fst) {
  Wfst out;
  if (fst.Empty()) return out;
  std::map<std::vector<StateId>, StateId> subset_ids;
  std::vector<std::vector<StateId>> subsets;
  auto intern = [&](std::vector<StateId> subset) {
    std::sort(subset.begin(), subset.end());
    subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
    auto it = subset_ids.find(subset);
    if (it != subset_ids.end()) return it->second;
    StateId id = out.AddState();
    subset_ids.emplace(subset, id);
    subsets.push_back(std::move(subset));
    return id;
  };
  out.SetStart(intern({fst.Start()}));
  for (size_t i = 0; i < subsets.size(); ++i) {
    std::map<Label, std::vector<StateId>> by_code;
    bool final = false;
    for (StateId s : subsets[i]) {
      final |= fst.IsFinal(s);
      for (const Arc &a : fst.Arcs(s)) {
        if (a.ilabel == kEpsilon || a.ilabel != a.olabel)
          throw Error("DeterminizeEncoded: input must be an epsilon-free "
                      "encoded acceptor");
        by_code[a.ilabel].push_back(a.next);
      }
    }
    // Copy before intern(), which may grow `subsets`.
    const StateId src = static_cast<StateId>(i);
    if (final) out.SetFinal(src, 0);
    for (auto &[code, targets] : by_code) {
      StateId next = intern(std::move(targets));
      out.AddArc(src, Arc{code, code, 0, next});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Lexicographic order over label sequences, optionally through symbols.
struct SequenceLess {
  const SymbolTable *syms;
  bool operator()(const std::vector<Label> &a,
                  const std::vector<Label> &b) const {
    if (!syms) return a < b;
    return std::lexicographical_compare(
        a.begin(), a.end(), b.begin(), b.end(),
        [this](Label x, Label y) { return syms->Symbol(x) < syms->Symbol(y); });
  }
};

void AppendLabel(std::vector<Label> *labels, Label l) {
  if (l != kEpsilon) labels->push_back(l);
}

Weight ForwardSum(const Wfst &fst, const Path &p) {
  Weight w = 0;
  StateId s = fst.Start();
  for (auto [state, idx] : p.arcs) {
    const Arc &a = fst.Arcs(state)[idx];
    w += a.weight;
    s = a.next;
  }
  return w + *fst.Final(s);
}

}  // namespace

Path BestPath(const Wfst &fst, const SymbolTable *syms) {
  if (fst.Empty()) throw Error("BestPath: empty automaton");
  auto order = TopologicalOrder(fst);
  SequenceLess less{syms};
  // Backward pass: best suffix weight and suffix labels per state.  Suffix
  // comparison is exact for the global lexicographic tie rule.
  constexpr Weight kNone = -std::numeric_limits<Weight>::infinity();
  std::vector<Weight> best(fst.NumStates(), kNone);
  std::vector<std::vector<Label>> suffix(fst.NumStates());
  std::vector<std::ptrdiff_t> choice(fst.NumStates(), -2);  // -1 = stop here
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    StateId s = *it;
    if (auto f = fst.Final(s)) {
      best[s] = *f;
      choice[s] = -1;
    }
    auto arcs = fst.Arcs(s);
    for (size_t i = 0; i < arcs.size(); ++i) {
      const Arc &a = arcs[i];
      if (best[a.next] == kNone) continue;
      Weight w = a.weight + best[a.next];
      std::vector<Label> cand;
      AppendLabel(&cand, a.ilabel);
      cand.insert(cand.end(), suffix[a.next].begin(), suffix[a.next].end());
      if (choice[s] == -2 || w > best[s] ||
          (w == best[s] && less(cand, suffix[s]))) {
        best[s] = w;
        suffix[s] = std::move(cand);
        choice[s] = static_cast<std::ptrdiff_t>(i);
      }
    }
  }
  if (choice[fst.Start()] == -2) throw Error("BestPath: no successful path");
  Path p;
  p.labels = suffix[fst.Start()];
  StateId s = fst.Start();
  while (choice[s] >= 0) {
    p.arcs.emplace_back(s, static_cast<size_t>(choice[s]));
    s = fst.Arcs(s)[choice[s]].next;
  }
  p.weight = ForwardSum(fst, p);
  return p;
}

std::vector<Path> EnumeratePaths(const Wfst &fst, size_t limit,
                                 const SymbolTable *syms) {
  std::vector<Path> out;
  if (fst.Empty() || limit == 0) return out;
  auto order = TopologicalOrder(fst);
  SequenceLess less{syms};
  auto path_less = [&less](const Path &a, const Path &b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return less(a.labels, b.labels);
  };

  if (limit == std::numeric_limits<size_t>::max()) {
    // Exhaustive depth-first enumeration.
    struct Frame {
      StateId s;
      size_t next_arc;
    };
    Path cur;
    std::vector<Weight> prefix{0};
    std::vector<Frame> stack{{fst.Start(), 0}};
    while (!stack.empty()) {
      Frame &fr = stack.back();
      if (fr.next_arc == 0 && fst.IsFinal(fr.s)) {
        Path p = cur;
        p.weight = prefix.back() + *fst.Final(fr.s);
        out.push_back(std::move(p));
      }
      auto arcs = fst.Arcs(fr.s);
      if (fr.next_arc < arcs.size()) {
        size_t i = fr.next_arc++;
        const Arc &a = arcs[i];
        cur.arcs.emplace_back(fr.s, i);
        if (a.ilabel != kEpsilon) cur.labels.push_back(a.ilabel);
        prefix.push_back(prefix.back() + a.weight);
        stack.push_back({a.next, 0});
      } else {
        stack.pop_back();
        if (!cur.arcs.empty() && !stack.empty()) {
          auto [ps, pi] = cur.arcs.back();
          if (fst.Arcs(ps)[pi].ilabel != kEpsilon) cur.labels.pop_back();
          cur.arcs.pop_back();
          prefix.pop_back();
        }
      }
    }
    std::sort(out.begin(), out.end(), path_less);
    return out;
  }

  // Best-first search guided by the exact best-suffix weight.
  constexpr Weight kNone = -std::numeric_limits<Weight>::infinity();
  std::vector<Weight> h(fst.NumStates(), kNone);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    StateId s = *it;
    if (auto f = fst.Final(s)) h[s] = *f;
    for (const Arc &a : fst.Arcs(s))
      if (h[a.next] != kNone) h[s] = std::max(h[s], a.weight + h[a.next]);
  }
  struct Item {
    Weight priority;
    Weight g;
    StateId s;  // kNoState for a completed path
    std::shared_ptr<const Path> path;
  };
  auto cmp = [](const Item &a, const Item &b) { return a.priority < b.priority; };
  std::priority_queue<Item, std::vector<Item>, decltype(cmp)> heap(cmp);
  if (h[fst.Start()] != kNone)
    heap.push({h[fst.Start()], 0, fst.Start(), std::make_shared<Path>()});
  Weight cutoff = kNone;
  while (!heap.empty()) {
    Item it = heap.top();
    if (out.size() >= limit) {
      Weight tol = 1e-9 * (1.0 + std::fabs(cutoff));
      if (it.priority < cutoff - tol) break;
    }
    heap.pop();
    if (it.s == kNoState) {
      Path p = *it.path;
      p.weight = it.g;
      out.push_back(std::move(p));
      if (out.size() == limit) cutoff = it.g;
      continue;
    }
    if (auto f = fst.Final(it.s))
      heap.push({it.g + *f, it.g + *f, kNoState, it.path});
    auto arcs = fst.Arcs(it.s);
    for (size_t i = 0; i < arcs.size(); ++i) {
      const Arc &a = arcs[i];
      if (h[a.next] == kNone) continue;
      auto p = std::make_shared<Path>(*it.path);
      p->arcs.emplace_back(it.s, i);
      AppendLabel(&p->labels, a.ilabel);
      Weight g = it.g + a.weight;
      heap.push({g + h[a.next], g, a.next, std::move(p)});
    }
  }
  std::sort(out.begin(), out.end(), path_less);
  if (out.size() > limit) out.resize(limit);
  return out;
}

// ---------------------------------------------------------------------------

StateId LazyFst::Start() {
  std::lock_guard<std::mutex> lock(mu_);
  if (!start_) start_ = ComputeStart();
  return *start_;
}

std::optional<Weight> LazyFst::Final(StateId s) { return ComputeFinal(s); }

const std::vector<Arc> &LazyFst::Arcs(StateId s) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = arcs_.find(s);
    if (it != arcs_.end()) return *it->second;
  }
  auto arcs = std::make_unique<const std::vector<Arc>>(ComputeArcs(s));
  std::lock_guard<std::mutex> lock(mu_);
  // First writer wins; concurrent computations produce identical arcs.
  auto [it, inserted] = arcs_.emplace(s, std::move(arcs));
  return *it->second;
}

size_t LazyFst::NumCachedStates() const {
  std::lock_guard<std::mutex> lock(mu_);
  return arcs_.size();
}

namespace {
void MatchSpan(std::span<const Arc> arcs, Label label, std::vector<Arc> *out) {
  for (const Arc &a : arcs) {
    if (a.ilabel == label) {
      out->push_back(a);
    } else if (a.ilabel == kSigma && label >= kFirstWordLabel &&
               !IsEndTag(label)) {
      Arc b = a;
      b.ilabel = label;
      if (b.olabel == kSigma) b.olabel = label;
      out->push_back(b);
    }
  }
}
}  // namespace

void StaticMatchFst::Match(StateId s, Label label, std::vector<Arc> *arcs) {
  MatchSpan(fst_.Arcs(s), label, arcs);
}

void LazyMatchFst::Match(StateId s, Label label, std::vector<Arc> *arcs) {
  MatchSpan(fst_.Arcs(s), label, arcs);
}

Wfst Materialize(LazyFst &fst, size_t max_states) {
  Wfst out;
  std::unordered_map<StateId, StateId> remap;
  std::deque<StateId> queue;
  auto visit = [&](StateId s) {
    auto it = remap.find(s);
    if (it != remap.end()) return it->second;
    if (remap.size() >= max_states)
      throw Error("Materialize: more than " + std::to_string(max_states) +
                  " states");
    StateId id = out.AddState();
    remap.emplace(s, id);
    queue.push_back(s);
    return id;
  };
  out.SetStart(visit(fst.Start()));
  while (!queue.empty()) {
    StateId s = queue.front();
    queue.pop_front();
    StateId src = remap.at(s);
    for (const Arc &a : fst.Arcs(s)) {
      StateId next = visit(a.next);
      out.AddArc(src, Arc{a.ilabel, a.olabel, a.weight, next});
    }
    if (auto f = fst.Final(s)) out.SetFinal(src, *f);
  }
  return out;
}

ComposeResult Compose(const Wfst &lattice, MatchFst &rhs) {
  ComposeResult res;
  if (lattice.Empty()) return res;
  if (!IsAcyclic(lattice)) throw Error("Compose: lattice must be acyclic");
  Wfst full;
  std::vector<std::pair<StateId, StateId>> origin;
  std::vector<std::vector<size_t>> arc_origin;
  std::map<std::pair<StateId, StateId>, StateId> ids;
  std::deque<StateId> queue;
  auto visit = [&](StateId ls, StateId rs) {
    auto key = std::make_pair(ls, rs);
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    StateId id = full.AddState();
    ids.emplace(key, id);
    origin.push_back(key);
    arc_origin.emplace_back();
    queue.push_back(id);
    return id;
  };
  full.SetStart(visit(lattice.Start(), rhs.Start()));
  std::vector<Arc> matched;
  while (!queue.empty()) {
    StateId id = queue.front();
    queue.pop_front();
    auto [ls, rs] = origin[id];
    auto larcs = lattice.Arcs(ls);
    for (size_t li = 0; li < larcs.size(); ++li) {
      const Arc &la = larcs[li];
      if (la.ilabel == kEpsilon)
        throw Error("Compose: lattice must be epsilon-free");
      matched.clear();
      rhs.Match(rs, la.ilabel, &matched);
      for (const Arc &ra : matched) {
        StateId next = visit(la.next, ra.next);
        full.AddArc(id, Arc{la.ilabel, la.ilabel, la.weight + ra.weight, next});
        arc_origin[id].push_back(li);
      }
    }
    auto lf = lattice.Final(ls);
    if (lf) {
      if (auto rf = rhs.Final(rs)) full.SetFinal(id, *lf + *rf);
    }
  }
  // Trim while keeping the origin table aligned.
  auto acc = Accessible(full);
  auto co = Coaccessible(full);
  std::vector<char> keep(full.NumStates());
  for (StateId s = 0; s < full.NumStates(); ++s) keep[s] = acc[s] && co[s];
  res.fst = Compact(full, keep);
  for (StateId s = 0; s < full.NumStates(); ++s) {
    if (!keep[s]) continue;
    res.origin.push_back(origin[s]);
    auto &kept = res.lattice_arc.emplace_back();
    auto arcs = full.Arcs(s);
    for (size_t i = 0; i < arcs.size(); ++i)
      if (keep[arcs[i].next]) kept.push_back(arc_origin[s][i]);
  }
  return res;
}

}  // namespace kgr
