// kgrescore/expander.h

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

#ifndef KGRESCORE_EXPANDER_H_
#define KGRESCORE_EXPANDER_H_

// On-demand expansion of the tagging transducer against a knowledge graph.
// Non-terminal arcs are replaced by tries over the distinct surfaces of their
// expansions; completed surfaces are recorded as bindings in the state until
// the feature's end tag.

#include <deque>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgrescore/compiler.h"
#include "kgrescore/fst.h"
#include "kgrescore/kg.h"

namespace kgr {

class EntityTrie {
 public:
  struct Node {
    std::vector<std::pair<Label, int32_t>> children;  // sorted by label
    const std::string *surface = nullptr;  // set when a surface ends here
    const std::vector<EntityIndex> *entities = nullptr;
  };

  const Node &node(int32_t i) const { return nodes_[i]; }
  size_t NumNodes() const { return nodes_.size(); }
  size_t NumSurfaces() const { return num_surfaces_; }

 private:
  friend class ExpansionContext;
  std::vector<Node> nodes_{Node{}};
  size_t num_surfaces_ = 0;
};

/// One completed non-terminal: the matched surface and its entities.  Both
/// pointers are interned by the ExpansionContext, so pointer equality is
/// value equality.
struct Binding {
  const std::string *surface = nullptr;
  const std::vector<EntityIndex> *entities = nullptr;
  bool operator==(const Binding &) const = default;
};

/// Shared, thread-safe state for expanding one (R_top, graph) pair: the
/// combined symbol table, per-state arc classes of R_top, and entity tries.
class ExpansionContext {
 public:
  ExpansionContext(const RTop &rtop, const KnowledgeGraph &graph);
  ExpansionContext(const ExpansionContext &) = delete;
  ExpansionContext &operator=(const ExpansionContext &) = delete;

  const RTop &rtop() const { return rtop_; }
  const KnowledgeGraph &graph() const { return graph_; }
  /// R_top symbols plus every entity-name word and the boundary words.
  const SymbolTable &symbols() const { return symbols_; }
  /// Label of an ordinary word (not reserved, not a tag, not a
  /// non-terminal), if the model or graph knows it.
  std::optional<Label> WordLabel(std::string_view word) const;

  struct TopArcs {
    std::vector<Arc> words;  // word and sigma arcs, sorted by ilabel
    std::vector<Arc> nonterminals;
    std::vector<Arc> tags;  // <f> entries and eps:<#id> exits
  };
  const TopArcs &top_arcs(StateId s) const { return top_arcs_[s]; }

  /// Trie for non-terminal `nt` entered with `bindings` (only the binding a
  /// relation condition refers to is consulted).
  const EntityTrie &Trie(Label nt, const std::vector<Binding> &bindings);
  size_t NumTries() const;

 private:
  const std::vector<EntityIndex> *InternEntities(std::vector<EntityIndex> v);
  const std::string *InternSurface(const std::string &s);
  std::unique_ptr<EntityTrie> BuildTrie(const NonTerminalSpec &spec,
                                        const Bindings &bindings);

  const RTop &rtop_;
  const KnowledgeGraph &graph_;
  SymbolTable symbols_;
  std::vector<TopArcs> top_arcs_;

  mutable std::mutex mu_;
  std::map<std::vector<EntityIndex>, std::unique_ptr<std::vector<EntityIndex>>>
      entity_sets_;
  std::map<std::string, std::unique_ptr<std::string>, std::less<>> surfaces_;
  std::map<Label, std::unique_ptr<EntityTrie>> static_tries_;
  std::map<std::pair<Label, const std::vector<EntityIndex> *>,
           std::unique_ptr<EntityTrie>>
      relation_tries_;
};

/// State of the expanded transducer.  Without a cursor, `base` is the current
/// R_top state.  With a cursor, the state sits at `node` of `trie` and `base`
/// is the R_top state reached once the surface is complete.
struct RkgState {
  StateId base = 0;
  const EntityTrie *trie = nullptr;
  int32_t node = -1;
  std::vector<Binding> bindings;

  bool HasCursor() const { return trie != nullptr; }
  bool operator==(const RkgState &) const = default;
};

struct RkgStateHash {
  size_t operator()(const RkgState &s) const;
};

/// The expanded transducer R_kg.  States are interned by value; arcs are
/// computed on request.  One instance may be shared across threads.
class RkgFst : public LazyFst {
 public:
  explicit RkgFst(ExpansionContext &context);

  ExpansionContext &context() { return context_; }
  /// Copy of the state behind `s`.
  RkgState state(StateId s) const;
  size_t NumStates() const;

  /// Word and sigma arcs accepting `word`; sigma arcs are reported with
  /// `word` on both sides.
  void MatchWord(StateId s, Label word, std::vector<Arc> *arcs);
  /// <f> and eps:<#id> arcs.
  void TagArcs(StateId s, std::vector<Arc> *arcs);

 protected:
  StateId ComputeStart() override;
  std::optional<Weight> ComputeFinal(StateId s) override;
  std::vector<Arc> ComputeArcs(StateId s) override;

 private:
  StateId Intern(RkgState st);
  // Appends arcs out of trie node `node`, optionally only those on `label`.
  void TrieArcs(const EntityTrie &trie, int32_t node, StateId dest,
                const std::vector<Binding> &bindings, std::optional<Label> label,
                std::vector<Arc> *arcs);
  void Collect(StateId s, std::optional<Label> word, bool words, bool tags,
               std::vector<Arc> *arcs);

  ExpansionContext &context_;
  mutable std::mutex mu_;
  std::deque<RkgState> states_;
  std::unordered_map<RkgState, StateId, RkgStateHash> ids_;
};

/// Fully expands R_kg (throws beyond `max_states`) and writes it with the
/// combined symbol table.
void DumpRkg(ExpansionContext &context, size_t max_states, std::ostream &fst_os,
             std::ostream &sym_os);

}  // namespace kgr

#endif  // KGRESCORE_EXPANDER_H_
