// kgrescore/kg.h

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

#ifndef KGRESCORE_KG_H_
#define KGRESCORE_KG_H_

#include <compare>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgrescore/common.h"

namespace kgr {

struct EntityName {
  std::string surface;             // lowercased, single-space separated
  std::vector<std::string> words;  // surface split on whitespace
  int word_count = 0;
};

struct EntityType {
  std::string name;
  double popularity = 0;
};

struct Relationship {
  std::string relation;
  std::string entity_id;
  double popularity = 0;
  EntityIndex target = -1;  // resolved index of entity_id
};

struct Entity {
  std::string id;
  std::vector<EntityName> names;
  std::vector<EntityType> types;
  std::vector<Relationship> relationships;
};

enum class PopTier { kHead = 0, kTorso = 1, kTail = 2 };

const char *PopTierName(PopTier tier);
std::optional<PopTier> ParsePopTier(std::string_view name);

/// Rank cutoffs over one type's entities sorted by descending popularity.
/// Membership is cumulative: rank <= head is head, rank <= torso is torso,
/// rank <= tail is tail (ranks are 1-based).
struct Strata {
  int head = 0;
  int torso = 0;
  int tail = 0;
  int Cutoff(PopTier tier) const;
  bool operator==(const Strata &) const = default;
};

/// Requested stratum sizes; they are clamped to the number of entities.
struct StrataSizes {
  int head = 100;
  int torso = 2000;
  int tail = 60000;
  bool operator==(const StrataSizes &) const = default;
};

struct RelationCondition {
  std::string relation;
  int ref_index = 0;  // 1-based index of an earlier non-terminal
  auto operator<=>(const RelationCondition &) const = default;
};

/// A non-terminal over entity names of one type, with optional conditions.
struct NonTerminalSpec {
  std::string type_name;
  std::optional<PopTier> pop_tier;
  std::optional<int> min_word_count;
  std::optional<RelationCondition> relation;
  auto operator<=>(const NonTerminalSpec &) const = default;
};

/// One distinct surface form produced by a non-terminal, with every entity
/// that carries it.
struct Expansion {
  std::vector<std::string> words;
  std::string surface;
  std::vector<EntityIndex> entities;  // sorted
  bool operator==(const Expansion &) const = default;
};

/// Bound entities per non-terminal position (1-based), as used by relation
/// conditions.
using Bindings = std::map<int, std::set<EntityIndex>>;

/// Immutable after construction; safe for concurrent readers.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  /// Validates entities, resolves relationship targets, ranks every type and
  /// computes strata (defaults, overridden per type by `strata_sizes`).
  KnowledgeGraph(std::vector<Entity> entities,
                 std::map<std::string, StrataSizes> strata_sizes = {});

  size_t NumEntities() const { return entities_.size(); }
  const Entity &entity(EntityIndex i) const { return entities_.at(i); }
  const std::vector<Entity> &entities() const { return entities_; }
  std::optional<EntityIndex> Find(std::string_view id) const;

  bool HasType(std::string_view type) const;
  std::vector<std::string> TypeNames() const;
  /// Entities of `type` by descending popularity, ties by id.
  const std::vector<EntityIndex> &Ranked(std::string_view type) const;
  /// 1-based rank of `e` within `type`, or 0 if `e` lacks the type.
  int Rank(EntityIndex e, std::string_view type) const;
  double Popularity(EntityIndex e, std::string_view type) const;
  bool HasEntityType(EntityIndex e, std::string_view type) const;
  const Strata &strata(std::string_view type) const;
  const std::map<std::string, StrataSizes> &strata_sizes() const {
    return strata_sizes_;
  }

  /// True if `e` has a relationship `relation` to any entity in `targets`.
  bool HasRelation(EntityIndex e, std::string_view relation,
                   const std::set<EntityIndex> &targets) const;

  /// Entities that have a name with exactly this surface.
  const std::vector<EntityIndex> &WithSurface(const std::string &surface) const;
  /// Longest name in words over all entities.
  int MaxNameWords() const { return max_name_words_; }
  /// Every word used in any entity name, sorted.
  std::vector<std::string> Vocabulary() const;

  bool operator==(const KnowledgeGraph &other) const;

 private:
  struct TypeIndex {
    std::vector<EntityIndex> ranked;
    std::unordered_map<EntityIndex, int> rank;
    Strata strata;
  };
  const TypeIndex &type_index(std::string_view type) const;

  std::vector<Entity> entities_;  // sorted by id
  std::unordered_map<std::string, EntityIndex> by_id_;
  std::map<std::string, TypeIndex, std::less<>> types_;
  std::map<std::string, StrataSizes> strata_sizes_;
  std::unordered_map<std::string, std::vector<EntityIndex>> by_surface_;
  int max_name_words_ = 0;
};

/// Rank cutoffs for `type_name` from the requested sizes, clamped to the
/// number of entities of that type.  Throws on unknown types or
/// head_n > torso_n > tail_n orderings.
Strata ComputeStrata(const KnowledgeGraph &graph, std::string_view type_name,
                     int head_n = 100, int torso_n = 2000, int tail_n = 60000);

/// Every distinct surface of entities satisfying all conditions of `spec`,
/// sorted by surface.  Throws on unknown types or missing bindings.
std::vector<Expansion> ExpandNonTerminal(const KnowledgeGraph &graph,
                                         const NonTerminalSpec &spec,
                                         const Bindings &bindings);

/// True if `e` satisfies the type, popularity and relation conditions of
/// `spec` (name word count is checked per name by the caller).
bool EntitySatisfies(const KnowledgeGraph &graph, EntityIndex e,
                     const NonTerminalSpec &spec, const Bindings &bindings);

// JSON document keyed by entity id; see README for the schema.
KnowledgeGraph ReadKnowledgeGraph(std::istream &is);
KnowledgeGraph LoadKnowledgeGraph(const std::string &path);
void WriteKnowledgeGraph(const KnowledgeGraph &graph, std::ostream &os);

}  // namespace kgr

#endif  // KGRESCORE_KG_H_
