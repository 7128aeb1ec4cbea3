// kgrescore/symbol_table.h

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

#ifndef KGRESCORE_SYMBOL_TABLE_H_
#define KGRESCORE_SYMBOL_TABLE_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgrescore/common.h"

namespace kgr {

/// Bijection between symbol strings and labels.  The reserved labels are
/// always present: "<eps>" = 0, "<sigma>" = 1, "<f>" = 2.  Feature end tags
/// are rendered as "<#id>" and mapped into the kEndTagBase range, so they never
/// collide with word labels.
class SymbolTable {
 public:
  SymbolTable();

  /// Returns the label of `symbol`, adding it with the next free word label if
  /// it is new.  End-tag strings are routed to their reserved range.
  Label AddSymbol(std::string_view symbol);
  /// Adds `symbol` with an explicit label; throws on conflicts.
  void AddSymbol(std::string_view symbol, Label label);

  std::optional<Label> Find(std::string_view symbol) const;
  const std::string &Symbol(Label label) const;
  bool Contains(Label label) const { return to_symbol_.count(label) != 0; }

  /// One past the largest label below the end-tag range.
  Label NextWordLabel() const { return next_; }
  size_t Size() const { return to_symbol_.size(); }

  /// All (symbol, label) pairs sorted by label.
  std::vector<std::pair<std::string, Label>> Entries() const;

  static std::string EndTagSymbol(int feature_id);

  void WriteText(std::ostream &os) const;
  static SymbolTable ReadText(std::istream &is);

  bool operator==(const SymbolTable &other) const {
    return to_label_ == other.to_label_;
  }

 private:
  std::unordered_map<std::string, Label> to_label_;
  std::unordered_map<Label, std::string> to_symbol_;
  Label next_ = kFirstWordLabel;
};

}  // namespace kgr

#endif  // KGRESCORE_SYMBOL_TABLE_H_
