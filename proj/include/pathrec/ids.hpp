#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pathrec {

// Entity kinds across the two supported catalog domains (e-commerce, movie).
enum class EntityKind : uint8_t {
  user,
  product,
  brand,
  category,
  image_feature,
  title_feature,
  related_product,
  movie,
  genre,
  director,
  actor,
  tag,
  region,
};

inline constexpr int kEntityKindCount = 13;

inline std::string_view to_string(EntityKind k) {
  switch (k) {
    case EntityKind::user: return "user";
    case EntityKind::product: return "product";
    case EntityKind::brand: return "brand";
    case EntityKind::category: return "category";
    case EntityKind::image_feature: return "image_feature";
    case EntityKind::title_feature: return "title_feature";
    case EntityKind::related_product: return "related_product";
    case EntityKind::movie: return "movie";
    case EntityKind::genre: return "genre";
    case EntityKind::director: return "director";
    case EntityKind::actor: return "actor";
    case EntityKind::tag: return "tag";
    case EntityKind::region: return "region";
  }
  return "?";
}

inline EntityKind entity_kind_from_string(std::string_view s) {
  for (int i = 0; i < kEntityKindCount; ++i) {
    EntityKind k = static_cast<EntityKind>(i);
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown entity kind: " + std::string(s));
}

// Forward relation names. The first fourteen are the e-commerce schema, the
// rest complete the movie schema (belong_to and produced_by are shared).
enum class RelationName : uint8_t {
  purchase,
  produced_by,
  belong_to,
  image_sim,
  title_sim,
  also_bought,
  also_viewed,
  viewed_bought,
  bought_together,
  also_bought_diff,
  also_viewed_diff,
  bought_viewed_diff,
  bought_together_diff,
  co_occur,
  directed_by,
  acted_by,
  described_as,
};

inline constexpr int kRelationNameCount = 17;

inline std::string_view to_string(RelationName r) {
  switch (r) {
    case RelationName::purchase: return "purchase";
    case RelationName::produced_by: return "produced_by";
    case RelationName::belong_to: return "belong_to";
    case RelationName::image_sim: return "image_sim";
    case RelationName::title_sim: return "title_sim";
    case RelationName::also_bought: return "also_bought";
    case RelationName::also_viewed: return "also_viewed";
    case RelationName::viewed_bought: return "viewed_bought";
    case RelationName::bought_together: return "bought_together";
    case RelationName::also_bought_diff: return "also_bought_diff";
    case RelationName::also_viewed_diff: return "also_viewed_diff";
    case RelationName::bought_viewed_diff: return "bought_viewed_diff";
    case RelationName::bought_together_diff: return "bought_together_diff";
    case RelationName::co_occur: return "co_occur";
    case RelationName::directed_by: return "directed_by";
    case RelationName::acted_by: return "acted_by";
    case RelationName::described_as: return "described_as";
  }
  return "?";
}

inline RelationName relation_name_from_string(std::string_view s) {
  for (int i = 0; i < kRelationNameCount; ++i) {
    RelationName r = static_cast<RelationName>(i);
    if (to_string(r) == s) return r;
  }
  throw std::invalid_argument("unknown relation name: " + std::string(s));
}

// A directed relation: a forward schema name or its materialized inverse twin.
struct Relation {
  RelationName name = RelationName::purchase;
  bool inverse = false;

  Relation() = default;
  Relation(RelationName n, bool inv = false) : name(n), inverse(inv) {}

  Relation twin() const { return Relation(name, !inverse); }

  // Dense id over the 2 * kRelationNameCount directed relations.
  int directed_id() const {
    return static_cast<int>(name) * 2 + (inverse ? 1 : 0);
  }

  std::string to_display() const {
    std::string s(to_string(name));
    if (inverse) s += "_inverse";
    return s;
  }

  friend bool operator==(const Relation& a, const Relation& b) {
    return a.name == b.name && a.inverse == b.inverse;
  }
  friend bool operator!=(const Relation& a, const Relation& b) {
    return !(a == b);
  }
  friend bool operator<(const Relation& a, const Relation& b) {
    return a.directed_id() < b.directed_id();
  }
};

struct EntityId {
  int32_t index = -1;
  EntityKind kind = EntityKind::product;

  EntityId() = default;
  EntityId(int32_t idx, EntityKind k) : index(idx), kind(k) {}

  bool valid() const { return index >= 0; }

  friend bool operator==(const EntityId& a, const EntityId& b) {
    return a.index == b.index;
  }
  friend bool operator!=(const EntityId& a, const EntityId& b) {
    return !(a == b);
  }
  friend bool operator<(const EntityId& a, const EntityId& b) {
    return a.index < b.index;
  }
};

// Allowed (head kind, tail kind) signatures per forward relation.
struct RelationSignature {
  EntityKind head;
  EntityKind tail;
};

inline const std::array<RelationSignature, 2>& relation_signatures(
    RelationName r, int& count) {
  using K = EntityKind;
  using R = RelationName;
  static const auto table = [] {
    std::array<std::pair<std::array<RelationSignature, 2>, int>,
               kRelationNameCount>
        t{};
    auto set1 = [&](R rel, K h, K ta) {
      t[static_cast<int>(rel)] = {{{RelationSignature{h, ta}, {}}}, 1};
    };
    auto set2 = [&](R rel, K h1, K t1, K h2, K t2) {
      t[static_cast<int>(rel)] = {
          {{RelationSignature{h1, t1}, RelationSignature{h2, t2}}}, 2};
    };
    set1(R::purchase, K::user, K::product);
    set2(R::produced_by, K::product, K::brand, K::movie, K::region);
    set2(R::belong_to, K::product, K::category, K::movie, K::genre);
    set1(R::image_sim, K::product, K::image_feature);
    set1(R::title_sim, K::product, K::title_feature);
    set1(R::also_bought, K::product, K::product);
    set1(R::also_viewed, K::product, K::product);
    set1(R::viewed_bought, K::product, K::product);
    set1(R::bought_together, K::product, K::product);
    set1(R::also_bought_diff, K::product, K::related_product);
    set1(R::also_viewed_diff, K::product, K::related_product);
    set1(R::bought_viewed_diff, K::product, K::related_product);
    set1(R::bought_together_diff, K::product, K::related_product);
    set1(R::co_occur, K::product, K::product);
    set1(R::directed_by, K::movie, K::director);
    set1(R::acted_by, K::movie, K::actor);
    set1(R::described_as, K::movie, K::tag);
    return t;
  }();
  const auto& entry = table[static_cast<int>(r)];
  count = entry.second;
  return entry.first;
}

// True when (head_kind, r, tail_kind) matches a schema row.
inline bool schema_allows(RelationName r, EntityKind head, EntityKind tail) {
  int n = 0;
  const auto& sigs = relation_signatures(r, n);
  for (int i = 0; i < n; ++i) {
    if (sigs[i].head == head && sigs[i].tail == tail) return true;
  }
  return false;
}

}  // namespace pathrec
