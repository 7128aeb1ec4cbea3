// src/expander.cc

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

#include "kgrescore/expander.h"

#include <algorithm>
#include <ostream>

namespace kgr {

ExpansionContext::ExpansionContext(const RTop &rtop, const KnowledgeGraph &graph)
    : rtop_(rtop), graph_(graph), symbols_(rtop.symbols) {
  for (std::string_view b : {kBos, kEos}) symbols_.AddSymbol(b);
  for (const std::string &w : graph.Vocabulary()) {
    Label l = symbols_.AddSymbol(w);
    if (l < kFirstWordLabel || IsEndTag(l) || rtop.IsNonTerminal(l))
      throw Error("entity name word '" + w + "' collides with a reserved symbol");
  }
  top_arcs_.resize(rtop.fst.NumStates());
  for (StateId s = 0; s < rtop.fst.NumStates(); ++s) {
    TopArcs &t = top_arcs_[s];
    for (const Arc &a : rtop.fst.Arcs(s)) {
      if (a.ilabel == kFeatureStart || a.ilabel == kEpsilon)
        t.tags.push_back(a);
      else if (rtop.IsNonTerminal(a.ilabel))
        t.nonterminals.push_back(a);
      else
        t.words.push_back(a);
    }
    std::stable_sort(t.words.begin(), t.words.end(),
                     [](const Arc &a, const Arc &b) { return a.ilabel < b.ilabel; });
  }
  for (const auto &[label, spec] : rtop.nonterminals) {
    if (spec.relation) continue;
    if (!graph.HasType(spec.type_name)) {
      static_tries_.emplace(label, std::make_unique<EntityTrie>());
      continue;
    }
    static_tries_.emplace(label, BuildTrie(spec, {}));
  }
}

std::optional<Label> ExpansionContext::WordLabel(std::string_view word) const {
  auto l = symbols_.Find(word);
  if (!l || *l < kFirstWordLabel || IsEndTag(*l) || rtop_.IsNonTerminal(*l))
    return std::nullopt;
  return l;
}

const std::vector<EntityIndex> *ExpansionContext::InternEntities(
    std::vector<EntityIndex> v) {
  auto it = entity_sets_.find(v);
  if (it != entity_sets_.end()) return it->second.get();
  auto p = std::make_unique<std::vector<EntityIndex>>(v);
  const auto *raw = p.get();
  entity_sets_.emplace(std::move(v), std::move(p));
  return raw;
}

const std::string *ExpansionContext::InternSurface(const std::string &s) {
  auto it = surfaces_.find(s);
  if (it != surfaces_.end()) return it->second.get();
  auto p = std::make_unique<std::string>(s);
  const auto *raw = p.get();
  surfaces_.emplace(s, std::move(p));
  return raw;
}

// Caller holds mu_ (or is the constructor).
std::unique_ptr<EntityTrie> ExpansionContext::BuildTrie(
    const NonTerminalSpec &spec, const Bindings &bindings) {
  auto trie = std::make_unique<EntityTrie>();
  for (const Expansion &x : ExpandNonTerminal(graph_, spec, bindings)) {
    int32_t n = 0;
    for (const std::string &w : x.words) {
      Label l = *symbols_.Find(w);
      auto &kids = trie->nodes_[n].children;
      auto it = std::lower_bound(
          kids.begin(), kids.end(), l,
          [](const std::pair<Label, int32_t> &c, Label v) { return c.first < v; });
      if (it != kids.end() && it->first == l) {
        n = it->second;
      } else {
        int32_t m = static_cast<int32_t>(trie->nodes_.size());
        kids.insert(it, {l, m});
        trie->nodes_.emplace_back();
        n = m;
      }
    }
    EntityTrie::Node &leaf = trie->nodes_[n];
    leaf.surface = InternSurface(x.surface);
    leaf.entities = InternEntities(x.entities);
    ++trie->num_surfaces_;
  }
  return trie;
}

const EntityTrie &ExpansionContext::Trie(Label nt,
                                         const std::vector<Binding> &bindings) {
  const NonTerminalSpec &spec = rtop_.nonterminals.at(nt);
  std::lock_guard<std::mutex> lock(mu_);
  if (!spec.relation) return *static_tries_.at(nt);
  size_t k = spec.relation->ref_index;
  if (k < 1 || k > bindings.size())
    throw Error("non-terminal " + rtop_.symbols.Symbol(nt) +
                " refers to an unbound position");
  const auto *ents = bindings[k - 1].entities;
  auto key = std::make_pair(nt, ents);
  auto it = relation_tries_.find(key);
  if (it != relation_tries_.end()) return *it->second;
  std::unique_ptr<EntityTrie> trie;
  if (!graph_.HasType(spec.type_name)) {
    trie = std::make_unique<EntityTrie>();
  } else {
    Bindings b;
    b[static_cast<int>(k)] = std::set<EntityIndex>(ents->begin(), ents->end());
    trie = BuildTrie(spec, b);
  }
  return *relation_tries_.emplace(key, std::move(trie)).first->second;
}

size_t ExpansionContext::NumTries() const {
  std::lock_guard<std::mutex> lock(mu_);
  return static_tries_.size() + relation_tries_.size();
}

// ---------------------------------------------------------------------------

size_t RkgStateHash::operator()(const RkgState &s) const {
  size_t h = std::hash<StateId>()(s.base);
  auto mix = [&h](size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  mix(std::hash<const void *>()(s.trie));
  mix(std::hash<int32_t>()(s.node));
  for (const Binding &b : s.bindings) {
    mix(std::hash<const void *>()(b.surface));
    mix(std::hash<const void *>()(b.entities));
  }
  return h;
}

RkgFst::RkgFst(ExpansionContext &context) : context_(context) {}

RkgState RkgFst::state(StateId s) const {
  std::lock_guard<std::mutex> lock(mu_);
  return states_.at(s);
}

size_t RkgFst::NumStates() const {
  std::lock_guard<std::mutex> lock(mu_);
  return states_.size();
}

StateId RkgFst::Intern(RkgState st) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = ids_.find(st);
  if (it != ids_.end()) return it->second;
  StateId id = static_cast<StateId>(states_.size());
  states_.push_back(st);
  ids_.emplace(std::move(st), id);
  return id;
}

StateId RkgFst::ComputeStart() { return Intern(RkgState{}); }

std::optional<Weight> RkgFst::ComputeFinal(StateId s) {
  RkgState st = state(s);
  if (st.HasCursor() || !st.bindings.empty()) return std::nullopt;
  return context_.rtop().fst.Final(st.base);
}

void RkgFst::TrieArcs(const EntityTrie &trie, int32_t node, StateId dest,
                      const std::vector<Binding> &bindings,
                      std::optional<Label> label, std::vector<Arc> *arcs) {
  const auto &kids = trie.node(node).children;
  auto begin = kids.begin(), end = kids.end();
  if (label) {
    begin = std::lower_bound(
        kids.begin(), kids.end(), *label,
        [](const std::pair<Label, int32_t> &c, Label v) { return c.first < v; });
    end = begin;
    if (end != kids.end() && end->first == *label) ++end;
  }
  for (auto it = begin; it != end; ++it) {
    const auto &[l, child] = *it;
    const EntityTrie::Node &m = trie.node(child);
    if (!m.children.empty()) {
      RkgState next{dest, &trie, child, bindings};
      arcs->push_back(Arc{l, l, 0, Intern(std::move(next))});
    }
    if (m.surface) {
      RkgState next{dest, nullptr, -1, bindings};
      next.bindings.push_back(Binding{m.surface, m.entities});
      arcs->push_back(Arc{l, l, 0, Intern(std::move(next))});
    }
  }
}

void RkgFst::Collect(StateId s, std::optional<Label> word, bool words,
                     bool tags, std::vector<Arc> *arcs) {
  RkgState st = state(s);
  if (st.HasCursor()) {
    if (words) TrieArcs(*st.trie, st.node, st.base, st.bindings, word, arcs);
    return;
  }
  const auto &top = context_.top_arcs(st.base);
  if (words) {
    for (const Arc &a : top.words) {
      if (word && a.ilabel != *word && a.ilabel != kSigma) continue;
      RkgState next{a.next, nullptr, -1, st.bindings};
      Arc b{a.ilabel, a.olabel, a.weight, Intern(std::move(next))};
      if (word && b.ilabel == kSigma) b.ilabel = b.olabel = *word;
      arcs->push_back(b);
    }
    for (const Arc &a : top.nonterminals) {
      const EntityTrie &trie = context_.Trie(a.ilabel, st.bindings);
      TrieArcs(trie, 0, a.next, st.bindings, word, arcs);
    }
  }
  if (tags) {
    for (const Arc &a : top.tags)
      arcs->push_back(Arc{a.ilabel, a.olabel, a.weight, Intern(RkgState{a.next, nullptr, -1, {}})});
  }
}

void RkgFst::MatchWord(StateId s, Label word, std::vector<Arc> *arcs) {
  Collect(s, word, true, false, arcs);
}

void RkgFst::TagArcs(StateId s, std::vector<Arc> *arcs) {
  Collect(s, std::nullopt, false, true, arcs);
}

std::vector<Arc> RkgFst::ComputeArcs(StateId s) {
  std::vector<Arc> arcs;
  Collect(s, std::nullopt, true, true, &arcs);
  std::stable_sort(arcs.begin(), arcs.end(), [](const Arc &a, const Arc &b) {
    return std::tie(a.ilabel, a.olabel, a.weight) <
           std::tie(b.ilabel, b.olabel, b.weight);
  });
  return arcs;
}

void DumpRkg(ExpansionContext &context, size_t max_states, std::ostream &fst_os,
             std::ostream &sym_os) {
  RkgFst rkg(context);
  Wfst fst = Materialize(rkg, max_states);
  WriteFstText(fst, fst_os);
  context.symbols().WriteText(sym_os);
}

}  // namespace kgr
