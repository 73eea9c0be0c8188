#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "pathrec/corpus.hpp"
#include "pathrec/ids.hpp"
#include "pathrec/registry.hpp"

namespace pathrec {

struct Triple {
  EntityId head;
  Relation rel;
  EntityId tail;

  Triple() = default;
  Triple(EntityId h, Relation r, EntityId t) : head(h), rel(r), tail(t) {}

  friend bool operator==(const Triple& a, const Triple& b) {
    return a.head == b.head && a.rel == b.rel && a.tail == b.tail;
  }
  friend bool operator<(const Triple& a, const Triple& b) {
    if (a.head.index != b.head.index) return a.head.index < b.head.index;
    if (a.rel != b.rel) return a.rel < b.rel;
    return a.tail.index < b.tail.index;
  }
};

namespace detail {

inline const std::set<std::string>& title_stopwords() {
  static const std::set<std::string> words = {
      "a",    "an",   "and",  "are", "as",   "at",   "be",   "by",  "for",
      "from", "in",   "is",   "it",  "of",   "on",   "or",   "the", "to",
      "with", "this", "that", "its", "your", "you",  "our",  "not", "no",
  };
  return words;
}

inline std::vector<std::string> tokenize_title(const std::string& title) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : title) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

}  // namespace detail

// Reads JSON-lines product metadata and emits attribute triples. Pass one
// registers every product id; pass two resolves also_* references, creating
// related_product entities for items outside the catalog. The raw also_*
// triples keep their base relation until split_relations decides the family.
inline std::vector<Triple> ingest_metadata(const std::string& path,
                                           EntityRegistry& registry) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metadata file: " + path);

  std::vector<nlohmann::json> rows;
  std::set<std::string> seen;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    std::string id = j.at("id").get<std::string>();
    if (!seen.insert(id).second) {
      throw std::runtime_error("duplicate product id in metadata: " + id);
    }
    registry.get_or_create(EntityKind::product, id);
    rows.push_back(std::move(j));
  }

  std::vector<Triple> triples;
  auto resolve_item = [&](const std::string& key) {
    EntityId id = registry.find(EntityKind::product, key);
    if (id.valid()) return id;
    return registry.get_or_create(EntityKind::related_product, key);
  };

  for (const auto& j : rows) {
    EntityId product =
        registry.find(EntityKind::product, j.at("id").get<std::string>());
    if (j.contains("brand") && j["brand"].is_string() &&
        !j["brand"].get<std::string>().empty()) {
      EntityId brand =
          registry.get_or_create(EntityKind::brand, j["brand"].get<std::string>());
      triples.emplace_back(product, Relation(RelationName::produced_by), brand);
    }
    if (j.contains("categories")) {
      for (const auto& c : j["categories"]) {
        EntityId cat =
            registry.get_or_create(EntityKind::category, c.get<std::string>());
        triples.emplace_back(product, Relation(RelationName::belong_to), cat);
      }
    }
    std::vector<std::string> tokens;
    if (j.contains("title_tokens")) {
      for (const auto& t : j["title_tokens"]) tokens.push_back(t.get<std::string>());
    } else if (j.contains("title")) {
      tokens = detail::tokenize_title(j["title"].get<std::string>());
    }
    std::set<std::string> distinct;
    for (auto& t : tokens) {
      std::string lowered;
      for (char c : t) {
        lowered.push_back(
            static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      }
      if (detail::title_stopwords().count(lowered)) continue;
      if (lowered.empty() || !distinct.insert(lowered).second) continue;
      EntityId feat = registry.get_or_create(EntityKind::title_feature, lowered);
      triples.emplace_back(product, Relation(RelationName::title_sim), feat);
    }
    auto emit_refs = [&](const char* field, RelationName rel) {
      if (!j.contains(field)) return;
      for (const auto& ref : j[field]) {
        EntityId tail = resolve_item(ref.get<std::string>());
        triples.emplace_back(product, Relation(rel), tail);
      }
    };
    emit_refs("also_viewed", RelationName::also_viewed);
    emit_refs("also_bought", RelationName::also_bought);
    emit_refs("bought_together", RelationName::bought_together);
  }
  return triples;
}

// Reads precomputed (item, label, confidence) rows and keeps, per item, the
// top_k labels whose confidence exceeds min_conf.
inline std::vector<Triple> ingest_image_features(const std::string& path,
                                                 EntityRegistry& registry,
                                                 double min_conf = 0.5,
                                                 int top_k = 5) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open image label file: " + path);

  struct Label {
    std::string name;
    double conf;
    size_t order;
  };
  std::map<std::string, std::vector<Label>> per_item;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string item, label, conf_str;
    if (!std::getline(ss, item, '\t') || !std::getline(ss, label, '\t') ||
        !std::getline(ss, conf_str, '\t')) {
      throw std::runtime_error("malformed image label at line " +
                               std::to_string(lineno));
    }
    double conf = std::stod(conf_str);
    if (conf < 0.0 || conf > 1.0) {
      throw std::runtime_error("confidence out of [0,1] at line " +
                               std::to_string(lineno));
    }
    per_item[item].push_back({label, conf, lineno});
  }

  std::vector<Triple> triples;
  for (auto& [item, labels] : per_item) {
    EntityId product = registry.find(EntityKind::product, item);
    if (!product.valid()) continue;  // label rows for unknown items are ignored
    std::stable_sort(labels.begin(), labels.end(),
                     [](const Label& a, const Label& b) {
                       if (a.conf != b.conf) return a.conf > b.conf;
                       return a.name < b.name;
                     });
    int kept = 0;
    for (const auto& l : labels) {
      if (l.conf <= min_conf) break;
      if (kept >= top_k) break;
      EntityId feat = registry.get_or_create(EntityKind::image_feature, l.name);
      triples.emplace_back(product, Relation(RelationName::image_sim), feat);
      ++kept;
    }
  }
  return triples;
}

// Renames also_viewed / also_bought / bought_together edges whose tail falls
// outside the product domain to their _diff twin. In-domain edges pass
// through unchanged, as does every other relation.
inline std::vector<Triple> split_relations(
    const std::vector<Triple>& triples,
    const std::set<int32_t>& product_domain) {
  auto diff_of = [](RelationName r) {
    switch (r) {
      case RelationName::also_viewed: return RelationName::also_viewed_diff;
      case RelationName::also_bought: return RelationName::also_bought_diff;
      case RelationName::bought_together:
        return RelationName::bought_together_diff;
      default: return r;
    }
  };
  std::vector<Triple> out;
  out.reserve(triples.size());
  for (const auto& t : triples) {
    RelationName diff = diff_of(t.rel.name);
    if (diff == t.rel.name || t.rel.inverse) {
      out.push_back(t);
      continue;
    }
    if (product_domain.count(t.tail.index)) {
      out.push_back(t);
    } else {
      out.emplace_back(t.head, Relation(diff), t.tail);
    }
  }
  return out;
}

struct MergeStats {
  size_t overlap_pairs = 0;         // pairs carrying both families
  size_t edges_removed = 0;         // input edges minus output edges
  double viewed_in_bought = 0.0;    // share of also_viewed endpoints also seen
                                    // on also_bought edges
  double bought_in_viewed = 0.0;
};

// For each unordered pair connected by both also_viewed and also_bought, all
// such edges collapse into a single viewed_bought triple (head = lower
// index). The _diff families collapse into bought_viewed_diff the same way;
// there the product keeps the head slot.
inline std::vector<Triple> merge_duplicate_edges(
    const std::vector<Triple>& triples, MergeStats* stats = nullptr) {
  using PairKey = std::pair<int32_t, int32_t>;
  auto canon = [](const Triple& t) -> PairKey {
    int32_t a = t.head.index, b = t.tail.index;
    return a <= b ? PairKey{a, b} : PairKey{b, a};
  };

  std::map<PairKey, int> viewed, bought, viewed_diff, bought_diff;
  std::set<int32_t> ents_viewed, ents_bought;
  for (const auto& t : triples) {
    switch (t.rel.name) {
      case RelationName::also_viewed:
        viewed[canon(t)]++;
        ents_viewed.insert(t.head.index);
        ents_viewed.insert(t.tail.index);
        break;
      case RelationName::also_bought:
        bought[canon(t)]++;
        ents_bought.insert(t.head.index);
        ents_bought.insert(t.tail.index);
        break;
      case RelationName::also_viewed_diff:
        viewed_diff[canon(t)]++;
        ents_viewed.insert(t.head.index);
        ents_viewed.insert(t.tail.index);
        break;
      case RelationName::also_bought_diff:
        bought_diff[canon(t)]++;
        ents_bought.insert(t.head.index);
        ents_bought.insert(t.tail.index);
        break;
      default:
        break;
    }
  }

  std::set<PairKey> merge_same, merge_diff;
  for (const auto& [key, n] : viewed) {
    (void)n;
    if (bought.count(key)) merge_same.insert(key);
  }
  for (const auto& [key, n] : viewed_diff) {
    (void)n;
    if (bought_diff.count(key)) merge_diff.insert(key);
  }

  std::vector<Triple> out;
  out.reserve(triples.size());
  std::set<PairKey> emitted_same, emitted_diff;
  for (const auto& t : triples) {
    PairKey key = canon(t);
    bool same_family = t.rel.name == RelationName::also_viewed ||
                       t.rel.name == RelationName::also_bought;
    bool diff_family = t.rel.name == RelationName::also_viewed_diff ||
                       t.rel.name == RelationName::also_bought_diff;
    if (same_family && merge_same.count(key)) {
      if (emitted_same.insert(key).second) {
        EntityId h = t.head, ta = t.tail;
        if (ta.index < h.index) std::swap(h, ta);
        out.emplace_back(h, Relation(RelationName::viewed_bought), ta);
      }
      continue;
    }
    if (diff_family && merge_diff.count(key)) {
      if (emitted_diff.insert(key).second) {
        // the product end stays in the head slot
        EntityId h = t.head, ta = t.tail;
        if (h.kind == EntityKind::related_product) std::swap(h, ta);
        out.emplace_back(h, Relation(RelationName::bought_viewed_diff), ta);
      }
      continue;
    }
    out.push_back(t);
  }

  if (stats) {
    stats->overlap_pairs = merge_same.size() + merge_diff.size();
    stats->edges_removed = triples.size() - out.size();
    size_t inter = 0;
    for (int32_t e : ents_viewed) inter += ents_bought.count(e);
    stats->viewed_in_bought =
        ents_viewed.empty() ? 0.0
                            : static_cast<double>(inter) /
                                  static_cast<double>(ents_viewed.size());
    size_t inter2 = 0;
    for (int32_t e : ents_bought) inter2 += ents_viewed.count(e);
    stats->bought_in_viewed =
        ents_bought.empty() ? 0.0
                            : static_cast<double>(inter2) /
                                  static_cast<double>(ents_bought.size());
  }
  return out;
}

// co_occur edges from adjacent item pairs of training sessions only.
inline std::vector<Triple> add_cooccur(const std::vector<Session>& train_sessions) {
  std::set<std::pair<int32_t, int32_t>> seen;
  std::vector<Triple> out;
  for (const auto& s : train_sessions) {
    for (size_t i = 0; i + 1 < s.items.size(); ++i) {
      EntityId a = s.items[i], b = s.items[i + 1];
      if (a.index == b.index) continue;
      if (seen.insert({a.index, b.index}).second) {
        out.emplace_back(a, Relation(RelationName::co_occur), b);
      }
    }
  }
  return out;
}

// purchase edges from training sessions only, deduplicated; the same leakage
// guard co_occur uses.
inline std::vector<Triple> purchase_triples(
    const std::vector<Session>& train_sessions) {
  std::set<std::pair<int32_t, int32_t>> seen;
  std::vector<Triple> out;
  for (const auto& s : train_sessions) {
    for (const auto& item : s.items) {
      if (seen.insert({s.user.index, item.index}).second) {
        out.emplace_back(s.user, Relation(RelationName::purchase), item);
      }
    }
  }
  return out;
}

// Immutable adjacency-indexed graph. Every forward triple and its inverse
// twin are materialized; adjacency lists are sorted by (relation, tail) so
// iteration order is deterministic.
class KnowledgeGraph {
 public:
  struct Edge {
    Relation rel;
    int32_t tail;

    friend bool operator<(const Edge& a, const Edge& b) {
      if (a.rel != b.rel) return a.rel < b.rel;
      return a.tail < b.tail;
    }
    friend bool operator==(const Edge& a, const Edge& b) {
      return a.rel == b.rel && a.tail == b.tail;
    }
  };

  static KnowledgeGraph finalize(EntityRegistry registry,
                                 const std::vector<Triple>& triples) {
    KnowledgeGraph g;
    g.registry_ = std::move(registry);
    const int32_t n = g.registry_.size();

    std::set<Triple> forward;
    for (const auto& t : triples) {
      if (t.head.index < 0 || t.head.index >= n || t.tail.index < 0 ||
          t.tail.index >= n) {
        throw std::runtime_error("dangling entity id in triple: " +
                                 std::to_string(t.head.index) + " -" +
                                 t.rel.to_display() + "-> " +
                                 std::to_string(t.tail.index));
      }
      if (t.rel.inverse) {
        forward.insert(Triple(t.tail, t.rel.twin(), t.head));
      } else {
        forward.insert(t);
      }
    }
    g.forward_.assign(forward.begin(), forward.end());

    for (const auto& t : g.forward_) {
      EntityKind hk = g.registry_.kind_of(t.head.index);
      EntityKind tk = g.registry_.kind_of(t.tail.index);
      if (!schema_allows(t.rel.name, hk, tk)) {
        throw std::runtime_error(
            "triple violates relation schema: " + std::string(to_string(hk)) +
            " -" + t.rel.to_display() + "-> " + std::string(to_string(tk)));
      }
    }

    std::vector<std::vector<Edge>> adj(static_cast<size_t>(n));
    for (const auto& t : g.forward_) {
      adj[static_cast<size_t>(t.head.index)].push_back({t.rel, t.tail.index});
      adj[static_cast<size_t>(t.tail.index)].push_back(
          {t.rel.twin(), t.head.index});
    }
    g.offsets_.resize(static_cast<size_t>(n) + 1, 0);
    for (int32_t i = 0; i < n; ++i) {
      auto& edges = adj[static_cast<size_t>(i)];
      std::sort(edges.begin(), edges.end());
      edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
      g.offsets_[static_cast<size_t>(i) + 1] =
          g.offsets_[static_cast<size_t>(i)] + edges.size();
      g.edges_.insert(g.edges_.end(), edges.begin(), edges.end());
    }

    for (const auto& t : g.forward_) {
      g.counts_[static_cast<size_t>(t.rel.name)]++;
    }
    return g;
  }

  const EntityRegistry& registry() const { return registry_; }
  int32_t entity_count() const { return registry_.size(); }

  std::span<const Edge> neighbors(int32_t entity) const {
    if (entity < 0 || entity >= entity_count()) {
      throw std::out_of_range("entity index out of range");
    }
    size_t lo = offsets_[static_cast<size_t>(entity)];
    size_t hi = offsets_[static_cast<size_t>(entity) + 1];
    return {edges_.data() + lo, hi - lo};
  }

  bool has_edge(int32_t head, Relation rel, int32_t tail) const {
    auto nbrs = neighbors(head);
    Edge probe{rel, tail};
    return std::binary_search(nbrs.begin(), nbrs.end(), probe);
  }

  // True when any relation connects head to tail.
  bool connected(int32_t head, int32_t tail) const {
    for (const auto& e : neighbors(head)) {
      if (e.tail == tail) return true;
    }
    return false;
  }

  const std::vector<Triple>& forward_triples() const { return forward_; }

  size_t forward_count(RelationName r) const {
    return counts_[static_cast<size_t>(r)];
  }

  size_t directed_edge_count() const { return edges_.size(); }

  std::vector<EntityId> products() const {
    auto p = registry_.all_of_kind(EntityKind::product);
    auto m = registry_.all_of_kind(EntityKind::movie);
    p.insert(p.end(), m.begin(), m.end());
    std::sort(p.begin(), p.end());
    return p;
  }

 private:
  EntityRegistry registry_;
  std::vector<Triple> forward_;
  std::vector<size_t> offsets_;
  std::vector<Edge> edges_;
  std::array<size_t, kRelationNameCount> counts_{};
};

// --- serialization -------------------------------------------------------

inline void save_graph(const KnowledgeGraph& graph, const std::string& dir,
                       const MergeStats* merge_stats = nullptr) {
  {
    std::ofstream out(dir + "/entities.tsv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/entities.tsv");
    const auto& reg = graph.registry();
    for (int32_t i = 0; i < reg.size(); ++i) {
      out << i << '\t' << to_string(reg.kind_of(i)) << '\t' << reg.key_of(i)
          << '\n';
    }
  }
  {
    std::ofstream out(dir + "/triples.tsv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/triples.tsv");
    for (const auto& t : graph.forward_triples()) {
      out << t.head.index << '\t' << to_string(t.rel.name) << '\t'
          << t.tail.index << '\n';
    }
  }
  {
    nlohmann::json stats;
    nlohmann::json ents;
    const auto& reg = graph.registry();
    std::map<std::string, size_t> kind_counts;
    for (int32_t i = 0; i < reg.size(); ++i) {
      kind_counts[std::string(to_string(reg.kind_of(i)))]++;
    }
    for (const auto& [k, v] : kind_counts) ents[k] = v;
    nlohmann::json rels;
    for (int i = 0; i < kRelationNameCount; ++i) {
      RelationName r = static_cast<RelationName>(i);
      size_t c = graph.forward_count(r);
      if (c > 0) rels[std::string(to_string(r))] = c;
    }
    stats["entities"] = ents;
    stats["relations"] = rels;
    stats["entity_total"] = reg.size();
    stats["forward_triple_total"] = graph.forward_triples().size();
    stats["directed_edge_total"] = graph.directed_edge_count();
    if (merge_stats) {
      stats["merge"] = {
          {"overlap_pairs", merge_stats->overlap_pairs},
          {"edges_removed", merge_stats->edges_removed},
          {"viewed_in_bought", merge_stats->viewed_in_bought},
          {"bought_in_viewed", merge_stats->bought_in_viewed},
      };
    }
    std::ofstream out(dir + "/stats.json");
    if (!out) throw std::runtime_error("cannot write " + dir + "/stats.json");
    out << stats.dump(2) << "\n";
  }
}

inline KnowledgeGraph load_graph(const std::string& dir) {
  EntityRegistry registry;
  {
    std::ifstream in(dir + "/entities.tsv");
    if (!in) throw std::runtime_error("cannot open " + dir + "/entities.tsv");
    std::string line;
    int32_t expected = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string idx, kind, key;
      std::getline(ss, idx, '\t');
      std::getline(ss, kind, '\t');
      std::getline(ss, key, '\t');
      EntityId id = registry.get_or_create(entity_kind_from_string(kind), key);
      if (id.index != expected++) {
        throw std::runtime_error("entities.tsv is not densely indexed");
      }
    }
  }
  std::vector<Triple> triples;
  {
    std::ifstream in(dir + "/triples.tsv");
    if (!in) throw std::runtime_error("cannot open " + dir + "/triples.tsv");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string h, rel, t;
      std::getline(ss, h, '\t');
      std::getline(ss, rel, '\t');
      std::getline(ss, t, '\t');
      int32_t hi = std::stoi(h), ti = std::stoi(t);
      triples.emplace_back(registry.id(hi),
                           Relation(relation_name_from_string(rel)),
                           registry.id(ti));
    }
  }
  return KnowledgeGraph::finalize(std::move(registry), triples);
}

}  // namespace pathrec
