// kgrescore/fst.h

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

#ifndef KGRESCORE_FST_H_
#define KGRESCORE_FST_H_

// A small weighted transducer kernel.  Weights follow the reward convention:
// a path's weight is the sum of its arc weights plus the final weight, and
// higher is better.  Final weights default to 0.

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "kgrescore/common.h"
#include "kgrescore/symbol_table.h"

namespace kgr {

struct Arc {
  Label ilabel = kEpsilon;
  Label olabel = kEpsilon;
  Weight weight = 0;
  StateId next = kNoState;

  bool operator==(const Arc &) const = default;
};

// Orders arcs by (ilabel, olabel, weight, next).
bool ArcLess(const Arc &a, const Arc &b);

class Wfst {
 public:
  StateId AddState();
  void SetStart(StateId s);
  StateId Start() const { return start_; }
  void SetFinal(StateId s, Weight w = 0);
  void ClearFinal(StateId s);
  bool IsFinal(StateId s) const { return states_[s].final.has_value(); }
  std::optional<Weight> Final(StateId s) const { return states_[s].final; }

  void AddArc(StateId src, const Arc &arc);
  std::span<const Arc> Arcs(StateId s) const { return states_[s].arcs; }
  std::vector<Arc> &MutableArcs(StateId s) { return states_[s].arcs; }

  StateId NumStates() const { return static_cast<StateId>(states_.size()); }
  size_t NumArcs() const;
  bool Empty() const { return start_ == kNoState; }

  /// Sorts every state's arcs with ArcLess.
  void SortArcs();
  /// Throws if the start or any arc target is out of range.
  void Validate() const;

  bool operator==(const Wfst &) const = default;

 private:
  struct State {
    std::vector<Arc> arcs;
    std::optional<Weight> final;
    bool operator==(const State &) const = default;
  };
  std::vector<State> states_;
  StateId start_ = kNoState;
};

// Text format: `src\tdst\tilabel\tolabel\tweight` per arc, `state\tweight`
// (or just `state`) per final state; the start state is 0.  Writing requires
// the start to be state 0 (use Canonicalize first if needed).
void WriteFstText(const Wfst &fst, std::ostream &os);
Wfst ReadFstText(std::istream &is);

/// True if no cycle is reachable from the start state.
bool IsAcyclic(const Wfst &fst);
/// Topological order of the states reachable from start; throws on a cycle.
std::vector<StateId> TopologicalOrder(const Wfst &fst);

/// Removes states that are not both accessible and coaccessible.
Wfst Trim(const Wfst &fst);

/// Trims, then renumbers states in breadth-first order from the start with
/// arcs visited in ArcLess order.  Two structurally identical automata come
/// out byte-identical.
Wfst Canonicalize(const Wfst &fst);

// ---------------------------------------------------------------------------
// Encoding of (ilabel, olabel, weight) triples as single symbols.

struct EncodeResult;

class EncodeTable {
 public:
  /// Label used for the pseudo-arc that carries a final weight to the
  /// super-final state in an encoded automaton.
  static constexpr Label kFinalMarker = -1;
  static constexpr Label kCodesPerTable = Label{1} << 20;

  Label Encode(Label ilabel, Label olabel, Weight weight);
  std::tuple<Label, Label, Weight> Decode(Label code) const;
  size_t Size() const { return triples_.size(); }
  /// Tag shared by an encoded automaton and its table.
  uint64_t Id() const { return id_; }

 private:
  friend EncodeResult Encode(const Wfst &fst);
  uint64_t id_ = 0;
  Label base_ = 1;
  std::map<std::tuple<Label, Label, uint64_t>, Label> codes_;
  std::vector<std::tuple<Label, Label, Weight>> triples_;
};

struct EncodeResult {
  Wfst fst;  // unweighted acceptor over codes
  std::shared_ptr<const EncodeTable> table;
  StateId super_final = kNoState;
};

/// Maps every distinct (ilabel, olabel, weight) to a fresh code (>= 1) on an
/// unweighted acceptor.  Final weights become code arcs into one super-final
/// state, so plain subset construction applies afterwards.
EncodeResult Encode(const Wfst &fst);
/// Inverts Encode.  A state that reaches the super-final state with several
/// distinct final weights keeps them as weighted epsilon arcs.  Throws if
/// `fst` was not produced from `encoded`'s table.
Wfst Decode(const Wfst &fst, const EncodeResult &encoded);

/// Subset construction over an encoded (epsilon-free) acceptor.  The result
/// is deterministic: no state has two arcs with the same code.
Wfst DeterminizeEncoded(const Wfst &fst);

// ---------------------------------------------------------------------------
// Paths.

struct Path {
  std::vector<Label> labels;  // input labels, epsilons dropped
  Weight weight = 0;
  std::vector<std::pair<StateId, size_t>> arcs;  // (state, arc index)
};

/// Maximum-weight path of an acyclic automaton.  Ties go to the
/// lexicographically smaller word sequence, compared by symbol string when
/// `syms` is given and by label otherwise.  Throws if there is no path.
Path BestPath(const Wfst &fst, const SymbolTable *syms = nullptr);

/// All paths (or the best `limit`), sorted by descending weight and then by
/// word sequence.  Throws on cyclic input.
std::vector<Path> EnumeratePaths(
    const Wfst &fst, size_t limit = std::numeric_limits<size_t>::max(),
    const SymbolTable *syms = nullptr);

// ---------------------------------------------------------------------------
// On-demand automata.

/// Automaton whose arcs are requested by label, as composition does.  Sigma
/// arcs match any ordinary label and are reported carrying that label.
class MatchFst {
 public:
  virtual ~MatchFst() = default;
  virtual StateId Start() = 0;
  virtual std::optional<Weight> Final(StateId s) = 0;
  virtual void Match(StateId s, Label label, std::vector<Arc> *arcs) = 0;
};

/// Automaton expanded state by state.  Arcs are computed on first request and
/// cached; the cache is guarded so one instance can be shared across threads.
class LazyFst {
 public:
  virtual ~LazyFst() = default;
  StateId Start();
  std::optional<Weight> Final(StateId s);
  /// The returned reference stays valid for the lifetime of this object.
  const std::vector<Arc> &Arcs(StateId s);
  size_t NumCachedStates() const;

 protected:
  virtual StateId ComputeStart() = 0;
  virtual std::optional<Weight> ComputeFinal(StateId s) = 0;
  virtual std::vector<Arc> ComputeArcs(StateId s) = 0;

 private:
  mutable std::mutex mu_;
  std::optional<StateId> start_;
  std::unordered_map<StateId, std::unique_ptr<const std::vector<Arc>>> arcs_;
};

/// Matching view over a static automaton.
class StaticMatchFst : public MatchFst {
 public:
  explicit StaticMatchFst(const Wfst &fst) : fst_(fst) {}
  StateId Start() override { return fst_.Start(); }
  std::optional<Weight> Final(StateId s) override { return fst_.Final(s); }
  void Match(StateId s, Label label, std::vector<Arc> *arcs) override;

 private:
  const Wfst &fst_;
};

/// Matching view over a lazy automaton.
class LazyMatchFst : public MatchFst {
 public:
  explicit LazyMatchFst(LazyFst &fst) : fst_(fst) {}
  StateId Start() override { return fst_.Start(); }
  std::optional<Weight> Final(StateId s) override { return fst_.Final(s); }
  void Match(StateId s, Label label, std::vector<Arc> *arcs) override;

 private:
  LazyFst &fst_;
};

/// Breadth-first materialization; throws if more than `max_states` states are
/// reachable.
Wfst Materialize(LazyFst &fst,
                 size_t max_states = std::numeric_limits<size_t>::max());

struct ComposeResult {
  Wfst fst;
  /// For each result state, the (lattice state, rhs state) pair.
  std::vector<std::pair<StateId, StateId>> origin;
  /// For each result state and arc, the index of the lattice arc it came from.
  std::vector<std::vector<size_t>> lattice_arc;
};

/// Composes an epsilon-free acyclic acceptor with `rhs`.  The result carries
/// the lattice's label on both sides, its weight is the sum of both weights,
/// and it is trimmed.  State ids follow a breadth-first discovery order.
ComposeResult Compose(const Wfst &lattice, MatchFst &rhs);

}  // namespace kgr

#endif  // KGRESCORE_FST_H_
