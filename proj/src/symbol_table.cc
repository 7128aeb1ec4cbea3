// src/symbol_table.cc

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

#include "kgrescore/symbol_table.h"

#include <algorithm>
#include <istream>
#include <ostream>

namespace kgr {

namespace {
std::optional<int> ParseEndTag(std::string_view s) {
  if (s.size() < 4 || s.substr(0, 2) != "<#" || s.back() != '>')
    return std::nullopt;
  std::string_view digits = s.substr(2, s.size() - 3);
  if (digits.empty() ||
      !std::all_of(digits.begin(), digits.end(),
                   [](char c) { return c >= '0' && c <= '9'; }))
    return std::nullopt;
  return static_cast<int>(ParseInt(digits));
}
}  // namespace

SymbolTable::SymbolTable() {
  AddSymbol("<eps>", kEpsilon);
  AddSymbol("<sigma>", kSigma);
  AddSymbol("<f>", kFeatureStart);
}

std::string SymbolTable::EndTagSymbol(int feature_id) {
  return "<#" + std::to_string(feature_id) + ">";
}

Label SymbolTable::AddSymbol(std::string_view symbol) {
  if (auto l = Find(symbol)) return *l;
  if (auto tag = ParseEndTag(symbol)) {
    Label l = EndTagLabel(*tag);
    AddSymbol(symbol, l);
    return l;
  }
  Label l = next_;
  AddSymbol(symbol, l);
  return l;
}

void SymbolTable::AddSymbol(std::string_view symbol, Label label) {
  if (label < 0) throw Error("negative label for symbol '" +
                             std::string(symbol) + "'");
  std::string s(symbol);
  auto it = to_label_.find(s);
  if (it != to_label_.end()) {
    if (it->second != label)
      throw Error("symbol '" + s + "' already has label " +
                  std::to_string(it->second));
    return;
  }
  auto jt = to_symbol_.find(label);
  if (jt != to_symbol_.end())
    throw Error("label " + std::to_string(label) + " already bound to '" +
                jt->second + "'");
  to_label_.emplace(s, label);
  to_symbol_.emplace(label, s);
  if (!IsEndTag(label) && label >= next_) next_ = label + 1;
}

std::optional<Label> SymbolTable::Find(std::string_view symbol) const {
  auto it = to_label_.find(std::string(symbol));
  if (it == to_label_.end()) return std::nullopt;
  return it->second;
}

const std::string &SymbolTable::Symbol(Label label) const {
  auto it = to_symbol_.find(label);
  if (it == to_symbol_.end())
    throw Error("unknown label " + std::to_string(label));
  return it->second;
}

std::vector<std::pair<std::string, Label>> SymbolTable::Entries() const {
  std::vector<std::pair<std::string, Label>> out(to_label_.begin(),
                                                 to_label_.end());
  std::sort(out.begin(), out.end(),
            [](const auto &a, const auto &b) { return a.second < b.second; });
  return out;
}

void SymbolTable::WriteText(std::ostream &os) const {
  for (const auto &[sym, label] : Entries()) os << sym << '\t' << label << '\n';
}

SymbolTable SymbolTable::ReadText(std::istream &is) {
  SymbolTable table;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (TrimView(line).empty()) continue;
    auto fields = SplitTabs(line);
    if (fields.size() != 2)
      throw ParseError("symbol table line " + std::to_string(lineno) +
                       ": expected 'symbol<TAB>id'");
    try {
      table.AddSymbol(fields[0], static_cast<Label>(ParseInt(fields[1])));
    } catch (const ParseError &) {
      throw;
    } catch (const Error &e) {
      throw ParseError("symbol table line " + std::to_string(lineno) + ": " +
                       e.what());
    }
  }
  return table;
}

}  // namespace kgr
