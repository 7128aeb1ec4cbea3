// kgrescore/compiler.h

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

#ifndef KGRESCORE_COMPILER_H_
#define KGRESCORE_COMPILER_H_

#include <iosfwd>
#include <map>
#include <string>

#include "kgrescore/features.h"
#include "kgrescore/fst.h"
#include "kgrescore/symbol_table.h"

namespace kgr {

/// The feature-tagging transducer.  State 0 is s_top: start, sole final state,
/// carrier of the sigma loop.  Non-terminals are single opaque symbols whose
/// text is their feature-grammar form.
struct RTop {
  Wfst fst;
  SymbolTable symbols;
  std::map<Label, NonTerminalSpec> nonterminals;
  int num_features = 0;

  bool IsNonTerminal(Label l) const { return nonterminals.count(l) != 0; }
};

/// Builds the tagging transducer of `model`: sigma loop on s_top, one
/// <f>-entered token chain per feature, an eps:<#id> exit carrying the
/// feature weight; then decode(determinize(encode(.))) and canonical
/// renumbering.
RTop BuildRTop(const Model &model);

/// Writes the automaton and its symbol table in the text formats.
void WriteRTop(const RTop &rtop, std::ostream &fst_os, std::ostream &sym_os);
RTop ReadRTop(std::istream &fst_os, std::istream &sym_os);
void SaveRTop(const RTop &rtop, const std::string &fst_path,
              const std::string &sym_path);
RTop LoadRTop(const std::string &fst_path, const std::string &sym_path);

}  // namespace kgr

#endif  // KGRESCORE_COMPILER_H_
