// kgrescore/synth.h

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

#ifndef KGRESCORE_SYNTH_H_
#define KGRESCORE_SYNTH_H_

// Text-level experiment harness: template sampling, a noisy channel that turns
// a sentence into a competing-hypothesis lattice, and sentence error rates.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgrescore/features.h"
#include "kgrescore/fst.h"
#include "kgrescore/kg.h"
#include "kgrescore/symbol_table.h"

namespace kgr {

/// Deterministic 64-bit mixer used to derive per-item seeds.
uint64_t SplitMix64(uint64_t x);
inline uint64_t DeriveSeed(uint64_t seed, uint64_t index) {
  return SplitMix64(seed ^ SplitMix64(index + 0x632be59bd9b4e019ULL));
}

/// Small portable generator; draws are identical on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}
  uint64_t Next() { return SplitMix64(state_ += 0x9e3779b97f4a7c15ULL); }
  /// Uniform in [0, 1).
  double Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }
  /// Uniform in [0, n).
  size_t Below(size_t n) { return static_cast<size_t>(Uniform() * n); }
  /// Index drawn with probability proportional to `weights`; uniform when
  /// they sum to zero.  Throws on an empty list.
  size_t Pick(const std::vector<double> &weights);

 private:
  uint64_t state_;
};

struct EntitySpan {
  size_t begin = 0;  // word offsets, end exclusive
  size_t end = 0;
  EntityIndex entity = -1;
  std::string type;
};

struct SampledUtterance {
  std::vector<std::string> words;
  std::vector<EntitySpan> entities;
  /// (anchor, partner) pairs realized through relation conditions.
  std::vector<std::pair<EntityIndex, EntityIndex>> relations;
};

/// Rank band of `stratum` within a type: head = ranks <= head cutoff,
/// torso = (head, torso], tail = (torso, tail].  Ranks are 1-based.
std::pair<int, int> StratumBand(const Strata &strata, PopTier stratum);

/// Samples `n` utterances.  Templates are drawn by frequency; each
/// unconditioned non-terminal draws an entity of its type from the stratum
/// band by popularity (restricted to entities that can satisfy later relation
/// conditions on it), relation-conditioned non-terminals draw a related entity
/// by relationship popularity, and names are uniform per entity.  Utterance i
/// uses seed DeriveSeed(seed, i).
std::vector<SampledUtterance> SampleUtterances(
    const std::vector<Template> &templates, const KnowledgeGraph &graph,
    PopTier stratum, size_t n, uint64_t seed);

/// word -> alternatives; an alternative may span several words.
using ConfusionPool = std::map<std::string, std::vector<std::vector<std::string>>>;

/// Character edit distance one.
bool WithinOneEdit(std::string_view a, std::string_view b);

/// Edit-distance-one neighbours within `vocabulary`, plus `extra`, plus
/// synthetic one-edit variants until every word has at least `min_size`
/// alternatives.
ConfusionPool BuildConfusionPool(const std::vector<std::string> &vocabulary,
                                 const ConfusionPool &extra, size_t min_size);

struct NoiseChannelConfig {
  double substitution_rate = 0.1;
  /// Per-position override of substitution_rate (when non-empty, must match
  /// the sentence length).
  std::vector<double> position_rates;
  ConfusionPool pool;
  int breadth = 3;
  int nbest = 10;
  uint64_t seed = 1;

  void Validate() const;
};

struct CorruptResult {
  Wfst lattice;  // over the symbol table passed in
  std::vector<std::pair<std::vector<std::string>, Weight>> nbest;
};

/// Sausage lattice for `words`.  Each position is confusable with
/// probability equal to its rate; a confusable position draws p ~ U(0,1),
/// keeps the true word with weight log(1 - p) and adds up to breadth - 1
/// alternatives whose weights split p harmonically.  The true path is always
/// present.  `syms` receives any new words.
CorruptResult CorruptToLattice(const std::vector<std::string> &words,
                               const NoiseChannelConfig &channel,
                               SymbolTable *syms);

/// True if some path of `lattice` spells `words`.
bool LatticeContains(const Wfst &lattice, const SymbolTable &syms,
                     const std::vector<std::string> &words);

struct EvalReport {
  size_t utterances = 0;
  size_t errors = 0;
  double ser = 0;
  std::optional<double> oracle_ser;
};

/// Sentence error rate (case-folded exact match).  With `lattices`, also the
/// share of utterances whose lattice lacks the reference.  Throws when the
/// key sets differ.
EvalReport Evaluate(
    const std::map<std::string, std::vector<std::string>> &outputs,
    const std::map<std::string, std::vector<std::string>> &references,
    const std::map<std::string, const Wfst *> *lattices = nullptr,
    const SymbolTable *syms = nullptr);

// Corpus: utt<TAB>words.  Confusions: word<TAB>alt1,alt2,...
std::vector<std::pair<std::string, std::vector<std::string>>> ReadCorpus(
    std::istream &is);
void WriteCorpus(
    const std::vector<std::pair<std::string, std::vector<std::string>>> &corpus,
    std::ostream &os);
std::map<std::string, std::vector<std::string>> LoadCorpusMap(
    const std::string &path);
ConfusionPool ReadConfusions(std::istream &is);
ConfusionPool LoadConfusions(const std::string &path);

}  // namespace kgr

#endif  // KGRESCORE_SYNTH_H_
