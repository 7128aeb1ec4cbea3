// src/kg.cc

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

#include "kgrescore/kg.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace kgr {

using json = nlohmann::ordered_json;

const char *PopTierName(PopTier tier) {
  switch (tier) {
    case PopTier::kHead: return "head";
    case PopTier::kTorso: return "torso";
    case PopTier::kTail: return "tail";
  }
  return "?";
}

std::optional<PopTier> ParsePopTier(std::string_view name) {
  if (name == "head") return PopTier::kHead;
  if (name == "torso") return PopTier::kTorso;
  if (name == "tail") return PopTier::kTail;
  return std::nullopt;
}

int Strata::Cutoff(PopTier tier) const {
  switch (tier) {
    case PopTier::kHead: return head;
    case PopTier::kTorso: return torso;
    case PopTier::kTail: return tail;
  }
  return 0;
}

namespace {

[[noreturn]] void Fail(const std::string &entity, const std::string &field,
                       const std::string &msg) {
  throw ParseError("entity " + entity + ", field '" + field + "': " + msg);
}

void CheckPopularity(double p, const std::string &entity,
                     const std::string &field) {
  if (!std::isfinite(p)) Fail(entity, field, "popularity must be finite");
  if (p < 0) Fail(entity, field, "negative popularity");
}

Strata ClampStrata(size_t n, const StrataSizes &sizes) {
  if (sizes.head < 0 || sizes.head > sizes.torso || sizes.torso > sizes.tail)
    throw Error("strata sizes must satisfy 0 <= head <= torso <= tail");
  int count = static_cast<int>(n);
  return Strata{std::min(sizes.head, count), std::min(sizes.torso, count),
                std::min(sizes.tail, count)};
}

}  // namespace

KnowledgeGraph::KnowledgeGraph(std::vector<Entity> entities,
                               std::map<std::string, StrataSizes> strata_sizes)
    : entities_(std::move(entities)), strata_sizes_(std::move(strata_sizes)) {
  std::sort(entities_.begin(), entities_.end(),
            [](const Entity &a, const Entity &b) { return a.id < b.id; });
  for (size_t i = 0; i < entities_.size(); ++i) {
    if (!by_id_.emplace(entities_[i].id, static_cast<EntityIndex>(i)).second)
      Fail(entities_[i].id, "id", "duplicate entity id");
  }
  for (size_t i = 0; i < entities_.size(); ++i) {
    Entity &e = entities_[i];
    for (EntityName &n : e.names) {
      n.words = SplitWords(ToLower(n.surface));
      n.surface = JoinWords(n.words);
      if (n.words.empty()) Fail(e.id, "names", "empty name");
      if (n.word_count != static_cast<int>(n.words.size()))
        Fail(e.id, "names/" + n.surface + "/word count",
             "word count " + std::to_string(n.word_count) + " but name has " +
                 std::to_string(n.words.size()) + " words");
      max_name_words_ = std::max(max_name_words_, n.word_count);
    }
    for (const EntityType &t : e.types)
      CheckPopularity(t.popularity, e.id, "types/" + t.name + "/popularity");
    for (Relationship &r : e.relationships) {
      if (r.relation.empty()) Fail(e.id, "relationships/relation", "empty");
      CheckPopularity(r.popularity, e.id, "relationships/popularity");
      auto it = by_id_.find(r.entity_id);
      if (it == by_id_.end())
        Fail(e.id, "relationships/entity id",
             "dangling relationship target " + r.entity_id);
      r.target = it->second;
    }
    std::set<std::string> seen;
    for (const EntityName &n : e.names) {
      if (!seen.insert(n.surface).second) continue;
      by_surface_[n.surface].push_back(static_cast<EntityIndex>(i));
    }
    for (const EntityType &t : e.types)
      types_[t.name].ranked.push_back(static_cast<EntityIndex>(i));
  }
  for (auto &[name, index] : types_) {
    const std::string &type = name;
    std::stable_sort(index.ranked.begin(), index.ranked.end(),
                     [&](EntityIndex a, EntityIndex b) {
                       double pa = Popularity(a, type), pb = Popularity(b, type);
                       if (pa != pb) return pa > pb;
                       return entities_[a].id < entities_[b].id;
                     });
    for (size_t r = 0; r < index.ranked.size(); ++r)
      index.rank.emplace(index.ranked[r], static_cast<int>(r + 1));
    auto it = strata_sizes_.find(name);
    index.strata = ClampStrata(index.ranked.size(), it == strata_sizes_.end()
                                                        ? StrataSizes{}
                                                        : it->second);
  }
}

std::optional<EntityIndex> KnowledgeGraph::Find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

bool KnowledgeGraph::HasType(std::string_view type) const {
  return types_.find(type) != types_.end();
}

std::vector<std::string> KnowledgeGraph::TypeNames() const {
  std::vector<std::string> out;
  for (const auto &[name, idx] : types_) out.push_back(name);
  return out;
}

const KnowledgeGraph::TypeIndex &KnowledgeGraph::type_index(
    std::string_view type) const {
  auto it = types_.find(type);
  if (it == types_.end())
    throw Error("unknown entity type '" + std::string(type) + "'");
  return it->second;
}

const std::vector<EntityIndex> &KnowledgeGraph::Ranked(
    std::string_view type) const {
  return type_index(type).ranked;
}

int KnowledgeGraph::Rank(EntityIndex e, std::string_view type) const {
  const auto &idx = type_index(type);
  auto it = idx.rank.find(e);
  return it == idx.rank.end() ? 0 : it->second;
}

double KnowledgeGraph::Popularity(EntityIndex e, std::string_view type) const {
  for (const EntityType &t : entities_[e].types)
    if (t.name == type) return t.popularity;
  return 0.0;
}

bool KnowledgeGraph::HasEntityType(EntityIndex e, std::string_view type) const {
  for (const EntityType &t : entities_[e].types)
    if (t.name == type) return true;
  return false;
}

const Strata &KnowledgeGraph::strata(std::string_view type) const {
  return type_index(type).strata;
}

bool KnowledgeGraph::HasRelation(EntityIndex e, std::string_view relation,
                                 const std::set<EntityIndex> &targets) const {
  for (const Relationship &r : entities_[e].relationships)
    if (r.relation == relation && targets.count(r.target)) return true;
  return false;
}

const std::vector<EntityIndex> &KnowledgeGraph::WithSurface(
    const std::string &surface) const {
  static const std::vector<EntityIndex> kNone;
  auto it = by_surface_.find(surface);
  return it == by_surface_.end() ? kNone : it->second;
}

std::vector<std::string> KnowledgeGraph::Vocabulary() const {
  std::set<std::string> words;
  for (const Entity &e : entities_)
    for (const EntityName &n : e.names) words.insert(n.words.begin(), n.words.end());
  return {words.begin(), words.end()};
}

bool KnowledgeGraph::operator==(const KnowledgeGraph &other) const {
  if (entities_.size() != other.entities_.size()) return false;
  for (size_t i = 0; i < entities_.size(); ++i) {
    const Entity &a = entities_[i], &b = other.entities_[i];
    if (a.id != b.id || a.names.size() != b.names.size() ||
        a.types.size() != b.types.size() ||
        a.relationships.size() != b.relationships.size())
      return false;
    for (size_t j = 0; j < a.names.size(); ++j)
      if (a.names[j].surface != b.names[j].surface ||
          a.names[j].word_count != b.names[j].word_count)
        return false;
    for (size_t j = 0; j < a.types.size(); ++j)
      if (a.types[j].name != b.types[j].name ||
          a.types[j].popularity != b.types[j].popularity)
        return false;
    for (size_t j = 0; j < a.relationships.size(); ++j) {
      const auto &ra = a.relationships[j], &rb = b.relationships[j];
      if (ra.relation != rb.relation || ra.entity_id != rb.entity_id ||
          ra.popularity != rb.popularity)
        return false;
    }
  }
  for (const auto &[name, idx] : types_)
    if (!other.HasType(name) || !(idx.strata == other.strata(name)))
      return false;
  return types_.size() == other.types_.size();
}

Strata ComputeStrata(const KnowledgeGraph &graph, std::string_view type_name,
                     int head_n, int torso_n, int tail_n) {
  const auto &ranked = graph.Ranked(type_name);
  return ClampStrata(ranked.size(), StrataSizes{head_n, torso_n, tail_n});
}

bool EntitySatisfies(const KnowledgeGraph &graph, EntityIndex e,
                     const NonTerminalSpec &spec, const Bindings &bindings) {
  int rank = graph.Rank(e, spec.type_name);
  if (rank == 0) return false;
  if (spec.pop_tier &&
      rank > graph.strata(spec.type_name).Cutoff(*spec.pop_tier))
    return false;
  if (spec.relation) {
    auto it = bindings.find(spec.relation->ref_index);
    if (it == bindings.end())
      throw Error("missing binding for non-terminal #" +
                  std::to_string(spec.relation->ref_index));
    if (!graph.HasRelation(e, spec.relation->relation, it->second))
      return false;
  }
  return true;
}

std::vector<Expansion> ExpandNonTerminal(const KnowledgeGraph &graph,
                                         const NonTerminalSpec &spec,
                                         const Bindings &bindings) {
  if (spec.relation && !bindings.count(spec.relation->ref_index))
    throw Error("missing binding for non-terminal #" +
                std::to_string(spec.relation->ref_index));
  std::map<std::string, Expansion> by_surface;
  for (EntityIndex e : graph.Ranked(spec.type_name)) {
    if (!EntitySatisfies(graph, e, spec, bindings)) continue;
    for (const EntityName &n : graph.entity(e).names) {
      if (spec.min_word_count && n.word_count < *spec.min_word_count) continue;
      Expansion &x = by_surface[n.surface];
      if (x.words.empty()) {
        x.words = n.words;
        x.surface = n.surface;
      }
      if (x.entities.empty() || x.entities.back() != e) x.entities.push_back(e);
    }
  }
  std::vector<Expansion> out;
  out.reserve(by_surface.size());
  for (auto &[s, x] : by_surface) {
    std::sort(x.entities.begin(), x.entities.end());
    x.entities.erase(std::unique(x.entities.begin(), x.entities.end()),
                     x.entities.end());
    out.push_back(std::move(x));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string IdString(const json &v, const std::string &entity) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  Fail(entity, "relationships/entity id", "must be a string or integer");
}

double Number(const json &v, const std::string &entity,
              const std::string &field) {
  if (!v.is_number()) Fail(entity, field, "must be a number");
  return v.get<double>();
}

}  // namespace

KnowledgeGraph ReadKnowledgeGraph(std::istream &is) {
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception &e) {
    throw ParseError(std::string("knowledge graph: malformed JSON: ") +
                     e.what());
  }
  if (!doc.is_object())
    throw ParseError("knowledge graph: top level must be an object");
  std::vector<Entity> entities;
  std::map<std::string, StrataSizes> strata;
  try {
  for (const auto &[key, value] : doc.items()) {
    if (key == "_strata") {
      if (!value.is_object()) Fail("_strata", "_strata", "must be an object");
      for (const auto &[type, s] : value.items()) {
        StrataSizes sizes;
        if (!s.is_object()) Fail("_strata", type, "must be an object");
        if (s.contains("head")) sizes.head = s["head"].get<int>();
        if (s.contains("torso")) sizes.torso = s["torso"].get<int>();
        if (s.contains("tail")) sizes.tail = s["tail"].get<int>();
        if (sizes.head < 0 || sizes.head > sizes.torso ||
            sizes.torso > sizes.tail)
          Fail("_strata", type, "need 0 <= head <= torso <= tail");
        strata[type] = sizes;
      }
      continue;
    }
    if (!value.is_object()) Fail(key, "", "entity must be an object");
    Entity e;
    e.id = key;
    if (value.contains("names")) {
      const json &names = value["names"];
      if (!names.is_object()) Fail(key, "names", "must be an object");
      for (const auto &[surface, info] : names.items()) {
        EntityName n;
        n.surface = surface;
        if (!info.is_object() || !info.contains("word count"))
          Fail(key, "names/" + surface, "missing 'word count'");
        const json &wc = info["word count"];
        if (!wc.is_number_integer())
          Fail(key, "names/" + surface + "/word count", "must be an integer");
        n.word_count = wc.get<int>();
        if (n.word_count <= 0)
          Fail(key, "names/" + surface + "/word count", "must be positive");
        e.names.push_back(std::move(n));
      }
    }
    if (value.contains("types")) {
      const json &types = value["types"];
      if (!types.is_object()) Fail(key, "types", "must be an object");
      for (const auto &[type, info] : types.items()) {
        EntityType t;
        t.name = type;
        if (info.is_object() && info.contains("popularity"))
          t.popularity =
              Number(info["popularity"], key, "types/" + type + "/popularity");
        e.types.push_back(std::move(t));
      }
    }
    if (value.contains("relationships")) {
      const json &rels = value["relationships"];
      if (!rels.is_array()) Fail(key, "relationships", "must be an array");
      for (const json &r : rels) {
        Relationship rel;
        if (!r.is_object() || !r.contains("relation") ||
            !r["relation"].is_string())
          Fail(key, "relationships/relation", "missing or not a string");
        rel.relation = r["relation"].get<std::string>();
        if (!r.contains("entity id"))
          Fail(key, "relationships/entity id", "missing");
        rel.entity_id = IdString(r["entity id"], key);
        if (r.contains("popularity"))
          rel.popularity =
              Number(r["popularity"], key, "relationships/popularity");
        e.relationships.push_back(std::move(rel));
      }
    }
    entities.push_back(std::move(e));
  }
  } catch (const json::exception &e) {
    throw ParseError(std::string("knowledge graph: ") + e.what());
  }
  return KnowledgeGraph(std::move(entities), std::move(strata));
}

KnowledgeGraph LoadKnowledgeGraph(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open knowledge graph '" + path + "'");
  return ReadKnowledgeGraph(is);
}

void WriteKnowledgeGraph(const KnowledgeGraph &graph, std::ostream &os) {
  json doc = json::object();
  if (!graph.strata_sizes().empty()) {
    json s = json::object();
    for (const auto &[type, sizes] : graph.strata_sizes())
      s[type] = {{"head", sizes.head}, {"torso", sizes.torso},
                 {"tail", sizes.tail}};
    doc["_strata"] = s;
  }
  for (const Entity &e : graph.entities()) {
    json names = json::object();
    for (const EntityName &n : e.names)
      names[n.surface] = {{"word count", n.word_count}};
    json types = json::object();
    for (const EntityType &t : e.types)
      types[t.name] = {{"popularity", t.popularity}};
    json rels = json::array();
    for (const Relationship &r : e.relationships)
      rels.push_back({{"relation", r.relation},
                      {"entity id", r.entity_id},
                      {"popularity", r.popularity}});
    doc[e.id] = {{"names", names}, {"types", types}, {"relationships", rels}};
  }
  os << doc.dump(2) << '\n';
}

}  // namespace kgr
