// src/features.cc

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

#include "kgrescore/features.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

namespace kgr {

namespace {

std::string Underscored(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), ' ', '_');
  return out;
}

std::string Spaced(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

bool IsBoundary(std::string_view tok) { return tok == kBos || tok == kEos; }

bool LooksLikeNonTerminal(std::string_view tok) {
  return tok.size() >= 2 && tok.front() == '<' && tok.back() == '>' &&
         !IsBoundary(tok);
}

std::vector<std::string_view> SplitOn(std::string_view s, char c) {
  std::vector<std::string_view> out;
  size_t b = 0;
  while (true) {
    size_t e = s.find(c, b);
    out.push_back(s.substr(b, e == std::string_view::npos ? e : e - b));
    if (e == std::string_view::npos) break;
    b = e + 1;
  }
  return out;
}

void CheckRelations(const std::vector<Token> &tokens) {
  int nt = 0;
  for (const Token &t : tokens) {
    if (!IsNonTerminal(t)) continue;
    ++nt;
    const auto &spec = std::get<NonTerminalSpec>(t);
    if (spec.relation && spec.relation->ref_index >= nt)
      throw ParseError("relation reference @" +
                       std::to_string(spec.relation->ref_index) +
                       " must point to an earlier non-terminal (this is #" +
                       std::to_string(nt) + ")");
  }
}

// Reads non-comment lines with their 1-based line numbers.
template <typename F>
void ForEachLine(std::istream &is, F &&f) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (TrimView(line).empty() || line[0] == '#') continue;
    try {
      f(line, lineno);
    } catch (const ParseError &e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

FeatureNGram ParseFeatureLine(const std::string &line) {
  auto fields = SplitTabs(line);
  if (fields.size() < 2 || fields.size() > 3)
    throw ParseError("expected id<TAB>feature[<TAB>weight]");
  FeatureNGram f = ParseFeature(fields[1]);
  f.id = static_cast<int>(ParseInt(fields[0]));
  if (fields.size() == 3) f.weight = ParseWeight(fields[2]);
  return f;
}

void CheckDenseIds(const std::vector<FeatureNGram> &features) {
  for (size_t i = 0; i < features.size(); ++i)
    if (features[i].id != static_cast<int>(i + 1))
      throw ParseError("feature ids must be dense 1..F in order; found id " +
                       std::to_string(features[i].id) + " at position " +
                       std::to_string(i + 1));
}

template <typename T>
T LoadWith(const std::string &path, T (*reader)(std::istream &)) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  try {
    return reader(is);
  } catch (const ParseError &e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace

std::string NonTerminalText(const NonTerminalSpec &spec) {
  std::string out = "<" + Underscored(spec.type_name);
  if (spec.pop_tier) out += std::string(";pop=") + PopTierName(*spec.pop_tier);
  if (spec.min_word_count) out += ";wc>=" + std::to_string(*spec.min_word_count);
  if (spec.relation)
    out += ";rel=" + Underscored(spec.relation->relation) + "@" +
           std::to_string(spec.relation->ref_index);
  return out + ">";
}

NonTerminalSpec ParseNonTerminal(std::string_view text) {
  if (!LooksLikeNonTerminal(text))
    throw ParseError("not a non-terminal: '" + std::string(text) + "'");
  auto parts = SplitOn(text.substr(1, text.size() - 2), ';');
  NonTerminalSpec spec;
  if (parts[0].empty())
    throw ParseError("empty type in '" + std::string(text) + "'");
  spec.type_name = Spaced(parts[0]);
  for (size_t i = 1; i < parts.size(); ++i) {
    std::string_view p = parts[i];
    auto bad = [&](const std::string &why) {
      throw ParseError(why + " in '" + std::string(text) + "'");
    };
    if (p.starts_with("pop=")) {
      if (spec.pop_tier) bad("repeated pop condition");
      auto tier = ParsePopTier(p.substr(4));
      if (!tier) bad("unknown popularity tier '" + std::string(p.substr(4)) + "'");
      spec.pop_tier = tier;
    } else if (p.starts_with("wc>=")) {
      if (spec.min_word_count) bad("repeated wc condition");
      std::string_view v = p.substr(4);
      if (v != "1" && v != "2" && v != "3") bad("wc must be 1, 2 or 3");
      spec.min_word_count = v[0] - '0';
    } else if (p.starts_with("rel=")) {
      if (spec.relation) bad("repeated rel condition");
      std::string_view v = p.substr(4);
      size_t at = v.rfind('@');
      if (at == std::string_view::npos || at == 0 || at + 1 == v.size())
        bad("rel condition must be RELATION@k");
      long k;
      try {
        k = ParseInt(v.substr(at + 1));
      } catch (const Error &) {
        bad("bad relation index");
      }
      if (k < 1) bad("relation index must be positive");
      spec.relation = RelationCondition{Spaced(v.substr(0, at)),
                                        static_cast<int>(k)};
    } else {
      bad("unknown condition '" + std::string(p) + "'");
    }
  }
  return spec;
}

std::vector<Token> ParseTokens(std::string_view text) {
  std::vector<Token> tokens;
  for (std::string &w : SplitWords(text)) {
    if (LooksLikeNonTerminal(w))
      tokens.emplace_back(ParseNonTerminal(w));
    else if (w.front() == '<' && !IsBoundary(w))
      throw ParseError("malformed token '" + w + "'");
    else
      tokens.emplace_back(IsBoundary(w) ? w : ToLower(w));
  }
  CheckRelations(tokens);
  return tokens;
}

std::string TokensText(const std::vector<Token> &tokens) {
  std::string out;
  for (const Token &t : tokens) {
    if (!out.empty()) out += ' ';
    out += IsNonTerminal(t) ? NonTerminalText(std::get<NonTerminalSpec>(t))
                            : std::get<std::string>(t);
  }
  return out;
}

int CountNonTerminals(const std::vector<Token> &tokens) {
  return static_cast<int>(
      std::count_if(tokens.begin(), tokens.end(), IsNonTerminal));
}

FeatureNGram ParseFeature(std::string_view text) {
  FeatureNGram f;
  f.tokens = ParseTokens(text);
  if (CountNonTerminals(f.tokens) == 0)
    throw ParseError("feature '" + std::string(TrimView(text)) +
                     "' has no non-terminal");
  return f;
}

void Model::Validate() const {
  CheckDenseIds(features);
  if (!std::isfinite(base_weight)) throw Error("w0 must be finite");
  for (const FeatureNGram &f : features) {
    if (CountNonTerminals(f.tokens) == 0)
      throw Error("feature " + std::to_string(f.id) + " has no non-terminal");
    if (!std::isfinite(f.weight))
      throw Error("feature " + std::to_string(f.id) + " has a non-finite weight");
    CheckRelations(f.tokens);
  }
}

// ---------------------------------------------------------------------------

namespace {

// Returns the window [b, b + n) of `padded` with relation conditions either
// dropped or re-indexed to the window's own non-terminal numbering.  Sets
// *has_relation if any relation survived.
std::vector<Token> Window(const std::vector<Token> &padded,
                          const std::vector<int> &nt_index, size_t b, size_t n,
                          bool keep_relations, bool *has_relation) {
  std::vector<Token> out(padded.begin() + b, padded.begin() + b + n);
  int first_nt = -1;
  for (size_t i = b; i < b + n && first_nt < 0; ++i)
    if (nt_index[i] > 0) first_nt = nt_index[i];
  for (Token &t : out) {
    if (!IsNonTerminal(t)) continue;
    auto &spec = std::get<NonTerminalSpec>(t);
    if (!spec.relation) continue;
    int ref = spec.relation->ref_index;
    if (keep_relations && first_nt > 0 && ref >= first_nt) {
      spec.relation->ref_index = ref - first_nt + 1;
      *has_relation = true;
    } else {
      spec.relation.reset();
    }
  }
  return out;
}

}  // namespace

std::vector<FeatureNGram> ExtractFeatures(const std::vector<Template> &templates,
                                          const ExtractOptions &options) {
  std::vector<FeatureNGram> out;
  std::set<std::string> seen;
  auto emit = [&](std::vector<Token> tokens) {
    std::string key = TokensText(tokens);
    if (!seen.insert(key).second) return;
    FeatureNGram f;
    f.id = static_cast<int>(out.size()) + 1;
    f.tokens = std::move(tokens);
    out.push_back(std::move(f));
  };
  for (const Template &t : templates) {
    std::vector<Token> padded;
    padded.emplace_back(std::string(kBos));
    padded.insert(padded.end(), t.tokens.begin(), t.tokens.end());
    padded.emplace_back(std::string(kEos));
    std::vector<int> nt_index(padded.size(), 0);
    int nt = 0;
    for (size_t i = 0; i < padded.size(); ++i)
      if (IsNonTerminal(padded[i])) nt_index[i] = ++nt;
    if (nt == 0) continue;
    auto window = [&](size_t b, size_t n) {
      bool rel = false;
      emit(Window(padded, nt_index, b, n, false, &rel));
      if (options.relations) {
        auto with = Window(padded, nt_index, b, n, true, &rel);
        if (rel) emit(std::move(with));
      }
    };
    for (size_t b = 0; b + 3 <= padded.size(); ++b) {
      if (nt_index[b] || nt_index[b + 1] || nt_index[b + 2]) window(b, 3);
    }
    for (size_t b = 0; b + 4 <= padded.size(); ++b) {
      if (nt_index[b] && nt_index[b + 3]) window(b, 4);
    }
  }
  return out;
}

FactorMode ParseFactorMode(std::string_view name) {
  if (name == "none") return FactorMode::kNone;
  if (name == "wc") return FactorMode::kWordCount;
  if (name == "pop") return FactorMode::kPopularity;
  if (name == "both") return FactorMode::kBoth;
  throw ParseError("unknown factor mode '" + std::string(name) +
                   "' (expected none, wc, pop or both)");
}

std::vector<FeatureNGram> FactorFeatures(const std::vector<FeatureNGram> &features,
                                         FactorMode mode) {
  if (mode == FactorMode::kNone) return features;
  std::vector<FeatureNGram> out;
  std::set<std::string> seen;
  auto emit = [&](const FeatureNGram &f, auto &&apply) {
    FeatureNGram g;
    g.tokens = f.tokens;
    for (Token &t : g.tokens)
      if (IsNonTerminal(t)) apply(std::get<NonTerminalSpec>(t));
    if (!seen.insert(TokensText(g.tokens)).second) return;
    g.id = static_cast<int>(out.size()) + 1;
    out.push_back(std::move(g));
  };
  for (const FeatureNGram &f : features) {
    if (mode == FactorMode::kWordCount || mode == FactorMode::kBoth)
      for (int wc = 1; wc <= 3; ++wc)
        emit(f, [wc](NonTerminalSpec &s) { s.min_word_count = wc; });
    if (mode == FactorMode::kPopularity || mode == FactorMode::kBoth)
      for (PopTier tier : {PopTier::kHead, PopTier::kTorso, PopTier::kTail})
        emit(f, [tier](NonTerminalSpec &s) { s.pop_tier = tier; });
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<FeatureNGram> ReadFeatures(std::istream &is) {
  std::vector<FeatureNGram> out;
  ForEachLine(is, [&](const std::string &line, int) {
    out.push_back(ParseFeatureLine(line));
  });
  CheckDenseIds(out);
  return out;
}

void WriteFeatures(const std::vector<FeatureNGram> &features, std::ostream &os) {
  for (const FeatureNGram &f : features)
    os << f.id << '\t' << FeatureText(f) << '\t' << FormatWeight(f.weight)
       << '\n';
}

std::vector<Template> ReadTemplates(std::istream &is) {
  std::vector<Template> out;
  ForEachLine(is, [&](const std::string &line, int) {
    auto fields = SplitTabs(line);
    if (fields.size() > 2)
      throw ParseError("expected template[<TAB>frequency]");
    Template t;
    t.tokens = ParseTokens(fields[0]);
    if (t.tokens.empty()) throw ParseError("empty template");
    if (fields.size() == 2) t.frequency = ParseWeight(fields[1]);
    if (!(t.frequency > 0)) throw ParseError("frequency must be positive");
    out.push_back(std::move(t));
  });
  return out;
}

Model ReadModel(std::istream &is) {
  Model m;
  bool first = true;
  ForEachLine(is, [&](const std::string &line, int) {
    auto fields = SplitTabs(line);
    const bool base = fields.size() >= 2 && fields[1] == "<base>";
    if (base && (!first || fields.size() != 3 || fields[0] != "0"))
      throw ParseError("the base weight must be the first line, as 0<TAB><base><TAB>w0");
    first = false;
    if (base) {
      m.base_weight = ParseWeight(fields[2]);
      return;
    }
    m.features.push_back(ParseFeatureLine(line));
  });
  CheckDenseIds(m.features);
  return m;
}

void WriteModel(const Model &model, std::ostream &os) {
  os << "0\t<base>\t" << FormatWeight(model.base_weight) << '\n';
  WriteFeatures(model.features, os);
}

std::vector<FeatureNGram> LoadFeatures(const std::string &path) {
  return LoadWith(path, &ReadFeatures);
}

std::vector<Template> LoadTemplates(const std::string &path) {
  return LoadWith(path, &ReadTemplates);
}

Model LoadModel(const std::string &path) { return LoadWith(path, &ReadModel); }

}  // namespace kgr
