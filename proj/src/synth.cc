// src/synth.cc

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

#include "kgrescore/synth.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace kgr {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

size_t Rng::Pick(const std::vector<double> &weights) {
  if (weights.empty()) throw Error("Rng::Pick: empty weight list");
  double total = 0;
  for (double w : weights) total += w;
  if (!(total > 0)) return Below(weights.size());
  double u = Uniform() * total, acc = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  for (size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0) return i;
  return weights.size() - 1;
}

std::pair<int, int> StratumBand(const Strata &strata, PopTier stratum) {
  switch (stratum) {
    case PopTier::kHead: return {1, strata.head};
    case PopTier::kTorso: return {strata.head + 1, strata.torso};
    case PopTier::kTail: return {strata.torso + 1, strata.tail};
  }
  return {1, 0};
}

namespace {

using ReverseIndex =
    std::map<std::pair<std::string, EntityIndex>,
             std::vector<std::pair<EntityIndex, double>>>;

// (relation, target) -> [(source, relationship popularity)].
ReverseIndex BuildReverseIndex(const KnowledgeGraph &graph) {
  ReverseIndex index;
  for (size_t i = 0; i < graph.NumEntities(); ++i)
    for (const Relationship &r : graph.entity(static_cast<EntityIndex>(i)).relationships)
      index[{r.relation, r.target}].emplace_back(static_cast<EntityIndex>(i),
                                                 r.popularity);
  return index;
}

std::vector<const EntityName *> Names(const KnowledgeGraph &graph,
                                      EntityIndex e,
                                      const NonTerminalSpec &spec) {
  std::vector<const EntityName *> out;
  for (const EntityName &n : graph.entity(e).names)
    if (!spec.min_word_count || n.word_count >= *spec.min_word_count)
      out.push_back(&n);
  return out;
}

// Relation-conditioned partners of `anchor` for `spec`.
std::vector<std::pair<EntityIndex, double>> Partners(
    const KnowledgeGraph &graph, const ReverseIndex &index,
    const NonTerminalSpec &spec, EntityIndex anchor) {
  std::vector<std::pair<EntityIndex, double>> out;
  auto it = index.find({spec.relation->relation, anchor});
  if (it == index.end()) return out;
  for (auto [src, pop] : it->second)
    if (graph.HasEntityType(src, spec.type_name) &&
        !Names(graph, src, spec).empty())
      out.emplace_back(src, pop);
  return out;
}

}  // namespace

std::vector<SampledUtterance> SampleUtterances(
    const std::vector<Template> &templates, const KnowledgeGraph &graph,
    PopTier stratum, size_t n, uint64_t seed) {
  std::vector<SampledUtterance> out;
  if (n == 0) return out;
  if (templates.empty()) throw Error("no templates to sample from");
  const ReverseIndex index = BuildReverseIndex(graph);

  // Per template and non-terminal: the candidate pool for unconditioned
  // non-terminals, computed once.
  struct Slot {
    NonTerminalSpec spec;
    std::vector<EntityIndex> candidates;
    std::vector<double> weights;
  };
  std::vector<std::vector<Slot>> slots(templates.size());
  std::vector<double> freq;
  for (size_t t = 0; t < templates.size(); ++t) {
    freq.push_back(templates[t].frequency);
    std::vector<NonTerminalSpec> nts;
    for (const Token &tok : templates[t].tokens)
      if (IsNonTerminal(tok)) nts.push_back(std::get<NonTerminalSpec>(tok));
    for (size_t k = 0; k < nts.size(); ++k) {
      Slot slot{nts[k], {}, {}};
      if (!nts[k].relation) {
        const std::string &type = nts[k].type_name;
        if (!graph.HasType(type))
          throw Error("template uses unknown entity type '" + type + "'");
        auto [lo, hi] = StratumBand(graph.strata(type), stratum);
        const auto &ranked = graph.Ranked(type);
        for (int r = lo; r <= hi; ++r) {
          EntityIndex e = ranked[r - 1];
          if (Names(graph, e, nts[k]).empty()) continue;
          bool ok = true;
          for (size_t j = k + 1; j < nts.size() && ok; ++j)
            if (nts[j].relation &&
                nts[j].relation->ref_index == static_cast<int>(k + 1))
              ok = !Partners(graph, index, nts[j], e).empty();
          if (!ok) continue;
          slot.candidates.push_back(e);
          slot.weights.push_back(graph.Popularity(e, type));
        }
        if (slot.candidates.empty())
          throw Error(std::string("stratum '") + PopTierName(stratum) +
                      "' has no usable entities of type '" + type + "'");
      }
      slots[t].push_back(std::move(slot));
    }
  }

  for (size_t i = 0; i < n; ++i) {
    Rng rng(DeriveSeed(seed, i));
    size_t t = rng.Pick(freq);
    SampledUtterance u;
    std::vector<EntityIndex> chosen;
    size_t k = 0;
    for (const Token &tok : templates[t].tokens) {
      if (!IsNonTerminal(tok)) {
        u.words.push_back(std::get<std::string>(tok));
        continue;
      }
      const Slot &slot = slots[t][k++];
      EntityIndex e;
      if (!slot.spec.relation) {
        e = slot.candidates[rng.Pick(slot.weights)];
      } else {
        EntityIndex anchor = chosen.at(slot.spec.relation->ref_index - 1);
        auto partners = Partners(graph, index, slot.spec, anchor);
        if (partners.empty())
          throw Error("no entity related to '" + graph.entity(anchor).id +
                      "' for " + NonTerminalText(slot.spec));
        std::vector<double> w;
        for (auto &p : partners) w.push_back(p.second);
        e = partners[rng.Pick(w)].first;
        u.relations.emplace_back(anchor, e);
      }
      chosen.push_back(e);
      auto names = Names(graph, e, slot.spec);
      const EntityName *name = names[rng.Below(names.size())];
      EntitySpan span{u.words.size(), u.words.size() + name->words.size(), e,
                      slot.spec.type_name};
      u.words.insert(u.words.end(), name->words.begin(), name->words.end());
      u.entities.push_back(std::move(span));
    }
    out.push_back(std::move(u));
  }
  return out;
}

// ---------------------------------------------------------------------------

bool WithinOneEdit(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (b.size() - a.size() > 1) return false;
  size_t i = 0;
  while (i < a.size() && a[i] == b[i]) ++i;
  if (i == b.size()) return false;  // identical
  size_t ia = a.size() == b.size() ? i + 1 : i, ib = i + 1;
  for (; ia < a.size(); ++ia, ++ib)
    if (a[ia] != b[ib]) return false;
  return true;
}

ConfusionPool BuildConfusionPool(const std::vector<std::string> &vocabulary,
                                 const ConfusionPool &extra, size_t min_size) {
  std::vector<std::string> vocab(vocabulary);
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  const std::set<std::string> known(vocab.begin(), vocab.end());
  ConfusionPool pool;
  // Bucket by length so only lengths within one are compared.
  std::map<size_t, std::vector<const std::string *>> by_len;
  for (const std::string &w : vocab) by_len[w.size()].push_back(&w);
  for (const std::string &w : vocab) {
    auto &alts = pool[w];
    for (size_t len = w.size() == 0 ? 0 : w.size() - 1; len <= w.size() + 1; ++len) {
      auto it = by_len.find(len);
      if (it == by_len.end()) continue;
      for (const std::string *v : it->second)
        if (*v != w && WithinOneEdit(w, *v)) alts.push_back({*v});
    }
  }
  for (const auto &[w, alts] : extra) {
    auto &dst = pool[w];
    for (const auto &a : alts)
      if (std::find(dst.begin(), dst.end(), a) == dst.end()) dst.push_back(a);
  }
  static constexpr std::string_view kLetters = "aeioustrnlmdkhy";
  for (auto &[w, alts] : pool) {
    for (size_t pos = w.size(); pos-- > 0 && alts.size() < min_size;) {
      for (char c : kLetters) {
        if (alts.size() >= min_size) break;
        if (c == w[pos]) continue;
        std::string v = w;
        v[pos] = c;
        if (known.count(v)) continue;
        std::vector<std::string> alt{v};
        if (std::find(alts.begin(), alts.end(), alt) == alts.end())
          alts.push_back(std::move(alt));
      }
    }
  }
  return pool;
}

void NoiseChannelConfig::Validate() const {
  auto ok = [](double r) { return r >= 0 && r <= 1; };
  if (!ok(substitution_rate)) throw Error("substitution rate must be in [0,1]");
  for (double r : position_rates)
    if (!ok(r)) throw Error("position rates must be in [0,1]");
  if (breadth < 1) throw Error("lattice breadth must be at least 1");
  if (nbest < 1) throw Error("n-best size must be at least 1");
}

CorruptResult CorruptToLattice(const std::vector<std::string> &words,
                               const NoiseChannelConfig &channel,
                               SymbolTable *syms) {
  channel.Validate();
  if (words.empty()) throw Error("cannot corrupt an empty sentence");
  if (!channel.position_rates.empty() &&
      channel.position_rates.size() != words.size())
    throw Error("position rates do not match the sentence length");
  Rng rng(channel.seed);
  CorruptResult res;
  Wfst &lat = res.lattice;
  StateId cur = lat.AddState();
  lat.SetStart(cur);
  for (size_t i = 0; i < words.size(); ++i) {
    const std::string &w = words[i];
    const double rate = channel.position_rates.empty() ? channel.substitution_rate
                                                       : channel.position_rates[i];
    StateId next = lat.AddState();
    // Draws are made unconditionally so that each position consumes the same
    // amount of randomness.
    const double u = rng.Uniform();
    const double p = std::clamp(rng.Uniform(), 0.01, 0.99);
    const uint64_t shuffle_seed = rng.Next();
    std::vector<std::vector<std::string>> alts;
    auto it = channel.pool.find(w);
    if (u < rate && channel.breadth > 1 && it != channel.pool.end())
      alts = it->second;
    if (alts.empty()) {
      Label l = syms->AddSymbol(w);
      lat.AddArc(cur, Arc{l, l, 0, next});
      cur = next;
      continue;
    }
    Rng local(shuffle_seed);
    for (size_t k = alts.size(); k > 1; --k)
      std::swap(alts[k - 1], alts[local.Below(k)]);
    alts.resize(std::min(alts.size(), static_cast<size_t>(channel.breadth - 1)));
    double harmonic = 0;
    for (size_t k = 1; k <= alts.size(); ++k) harmonic += 1.0 / k;
    Label l = syms->AddSymbol(w);
    lat.AddArc(cur, Arc{l, l, std::log(1 - p), next});
    for (size_t k = 0; k < alts.size(); ++k) {
      Weight weight = std::log(p * (1.0 / (k + 1)) / harmonic);
      StateId s = cur;
      const auto &alt = alts[k];
      for (size_t j = 0; j < alt.size(); ++j) {
        StateId t = j + 1 == alt.size() ? next : lat.AddState();
        Label al = syms->AddSymbol(alt[j]);
        lat.AddArc(s, Arc{al, al, j == 0 ? weight : 0.0, t});
        s = t;
      }
    }
    cur = next;
  }
  lat.SetFinal(cur, 0);
  for (const Path &p : EnumeratePaths(lat, channel.nbest, syms)) {
    std::vector<std::string> hyp;
    for (Label l : p.labels) hyp.push_back(syms->Symbol(l));
    res.nbest.emplace_back(std::move(hyp), p.weight);
  }
  return res;
}

bool LatticeContains(const Wfst &lattice, const SymbolTable &syms,
                     const std::vector<std::string> &words) {
  if (lattice.Empty()) return false;
  std::set<StateId> cur{lattice.Start()};
  for (const std::string &w : words) {
    auto l = syms.Find(w);
    if (!l) return false;
    std::set<StateId> next;
    for (StateId s : cur)
      for (const Arc &a : lattice.Arcs(s))
        if (a.ilabel == *l) next.insert(a.next);
    if (next.empty()) return false;
    cur = std::move(next);
  }
  for (StateId s : cur)
    if (lattice.IsFinal(s)) return true;
  return false;
}

EvalReport Evaluate(
    const std::map<std::string, std::vector<std::string>> &outputs,
    const std::map<std::string, std::vector<std::string>> &references,
    const std::map<std::string, const Wfst *> *lattices,
    const SymbolTable *syms) {
  auto keys = [](const auto &m) {
    std::vector<std::string> k;
    for (const auto &kv : m) k.push_back(kv.first);
    return k;
  };
  if (keys(outputs) != keys(references))
    throw Error("system output and reference utterance ids differ");
  auto fold = [](const std::vector<std::string> &ws) {
    std::vector<std::string> out;
    for (const auto &w : ws) out.push_back(ToLower(w));
    return out;
  };
  EvalReport r;
  r.utterances = references.size();
  size_t oracle_errors = 0;
  for (const auto &[id, ref] : references) {
    if (fold(outputs.at(id)) != fold(ref)) ++r.errors;
    if (lattices) {
      auto it = lattices->find(id);
      if (it == lattices->end()) throw Error("no lattice for utterance " + id);
      if (!LatticeContains(*it->second, *syms, fold(ref))) ++oracle_errors;
    }
  }
  if (r.utterances) r.ser = static_cast<double>(r.errors) / r.utterances;
  if (lattices)
    r.oracle_ser = r.utterances ? static_cast<double>(oracle_errors) / r.utterances
                                : 0.0;
  return r;
}

// ---------------------------------------------------------------------------

std::vector<std::pair<std::string, std::vector<std::string>>> ReadCorpus(
    std::istream &is) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (TrimView(line).empty()) continue;
    auto f = SplitTabs(line);
    if (f.size() > 2 || f[0].empty())
      throw ParseError("corpus line " + std::to_string(lineno) +
                       ": expected utt<TAB>words");
    if (!seen.insert(f[0]).second)
      throw ParseError("corpus line " + std::to_string(lineno) +
                       ": duplicate utterance id '" + f[0] + "'");
    out.emplace_back(f[0], f.size() == 2 ? SplitWords(ToLower(f[1]))
                                         : std::vector<std::string>{});
  }
  return out;
}

void WriteCorpus(
    const std::vector<std::pair<std::string, std::vector<std::string>>> &corpus,
    std::ostream &os) {
  for (const auto &[id, words] : corpus) os << id << '\t' << JoinWords(words) << '\n';
}

std::map<std::string, std::vector<std::string>> LoadCorpusMap(
    const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  std::map<std::string, std::vector<std::string>> out;
  try {
    for (auto &[id, words] : ReadCorpus(is)) out.emplace(id, std::move(words));
  } catch (const ParseError &e) {
    throw ParseError(path + ": " + e.what());
  }
  return out;
}

ConfusionPool ReadConfusions(std::istream &is) {
  ConfusionPool pool;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (TrimView(line).empty() || line[0] == '#') continue;
    auto f = SplitTabs(line);
    if (f.size() != 2 || SplitWords(f[0]).size() != 1)
      throw ParseError("confusion line " + std::to_string(lineno) +
                       ": expected word<TAB>alt1,alt2,...");
    auto &alts = pool[ToLower(f[0])];
    size_t b = 0;
    while (b <= f[1].size()) {
      size_t e = f[1].find(',', b);
      if (e == std::string::npos) e = f[1].size();
      auto alt = SplitWords(ToLower(std::string_view(f[1]).substr(b, e - b)));
      if (!alt.empty()) alts.push_back(std::move(alt));
      b = e + 1;
    }
  }
  return pool;
}

ConfusionPool LoadConfusions(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  return ReadConfusions(is);
}

}  // namespace kgr
