// src/compiler.cc

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

#include "kgrescore/compiler.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace kgr {

namespace {

Label TokenLabel(const Token &t, RTop *rtop) {
  if (!IsNonTerminal(t)) return rtop->symbols.AddSymbol(std::get<std::string>(t));
  const auto &spec = std::get<NonTerminalSpec>(t);
  Label l = rtop->symbols.AddSymbol(NonTerminalText(spec));
  rtop->nonterminals.emplace(l, spec);
  return l;
}

}  // namespace

RTop BuildRTop(const Model &model) {
  model.Validate();
  RTop rtop;
  rtop.num_features = static_cast<int>(model.features.size());
  Wfst raw;
  StateId top = raw.AddState();
  raw.SetStart(top);
  raw.SetFinal(top, 0);
  raw.AddArc(top, Arc{kSigma, kSigma, 0, top});
  for (const FeatureNGram &f : model.features) {
    StateId s = raw.AddState();
    raw.AddArc(top, Arc{kFeatureStart, kFeatureStart, 0, s});
    for (const Token &t : f.tokens) {
      Label l = TokenLabel(t, &rtop);
      StateId n = raw.AddState();
      raw.AddArc(s, Arc{l, l, 0, n});
      s = n;
    }
    Label tag = rtop.symbols.AddSymbol(SymbolTable::EndTagSymbol(f.id));
    raw.AddArc(s, Arc{kEpsilon, tag, f.weight, top});
  }
  EncodeResult enc = Encode(raw);
  Wfst det = DeterminizeEncoded(enc.fst);
  rtop.fst = Canonicalize(Decode(det, enc));
  return rtop;
}

void WriteRTop(const RTop &rtop, std::ostream &fst_os, std::ostream &sym_os) {
  WriteFstText(rtop.fst, fst_os);
  rtop.symbols.WriteText(sym_os);
}

RTop ReadRTop(std::istream &fst_is, std::istream &sym_is) {
  RTop rtop;
  rtop.symbols = SymbolTable::ReadText(sym_is);
  rtop.fst = ReadFstText(fst_is);
  for (const auto &[sym, label] : rtop.symbols.Entries()) {
    if (IsEndTag(label)) {
      rtop.num_features = std::max(rtop.num_features, EndTagFeature(label));
    } else if (label >= kFirstWordLabel && sym.size() > 2 &&
               sym.front() == '<' && sym.back() == '>' && sym != kBos &&
               sym != kEos) {
      rtop.nonterminals.emplace(label, ParseNonTerminal(sym));
    }
  }
  for (StateId s = 0; s < rtop.fst.NumStates(); ++s)
    for (const Arc &a : rtop.fst.Arcs(s))
      for (Label l : {a.ilabel, a.olabel})
        if (!rtop.symbols.Contains(l))
          throw ParseError("automaton uses label " + std::to_string(l) +
                           " missing from the symbol table");
  return rtop;
}

void SaveRTop(const RTop &rtop, const std::string &fst_path,
              const std::string &sym_path) {
  std::ofstream f(fst_path), s(sym_path);
  if (!f) throw Error("cannot write '" + fst_path + "'");
  if (!s) throw Error("cannot write '" + sym_path + "'");
  WriteRTop(rtop, f, s);
  if (!f || !s) throw Error("write failed for '" + fst_path + "'");
}

RTop LoadRTop(const std::string &fst_path, const std::string &sym_path) {
  std::ifstream f(fst_path), s(sym_path);
  if (!f) throw Error("cannot open '" + fst_path + "'");
  if (!s) throw Error("cannot open '" + sym_path + "'");
  return ReadRTop(f, s);
}

}  // namespace kgr
