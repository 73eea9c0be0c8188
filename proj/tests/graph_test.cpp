#include "pathrec/graph.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace pathrec {
namespace {

namespace fs = std::filesystem;

class GraphTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "pathrec_graph_test";
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_file(const std::string& name, const std::string& body) {
    std::string path = (dir_ / name).string();
    std::ofstream out(path);
    out << body;
    return path;
  }

  fs::path dir_;
};

size_t count_rel(const std::vector<Triple>& ts, RelationName r) {
  size_t n = 0;
  for (const auto& t : ts) n += (t.rel.name == r && !t.rel.inverse);
  return n;
}

TEST_F(GraphTest, IngestMetadataEmitsAttributeTriples) {
  auto path = write_file("meta.jsonl",
      R"({"id": "p1", "brand": "acme", "categories": ["tools"], "title": "The Blue Hammer"})" "\n"
      R"({"id": "p2", "brand": "acme", "also_bought": ["p1", "ghost"], "title": "blue wrench"})" "\n");
  EntityRegistry reg;
  auto triples = ingest_metadata(path, reg);

  EXPECT_TRUE(reg.contains(EntityKind::product, "p1"));
  EXPECT_TRUE(reg.contains(EntityKind::product, "p2"));
  EXPECT_TRUE(reg.contains(EntityKind::brand, "acme"));
  EXPECT_TRUE(reg.contains(EntityKind::category, "tools"));
  // "the" is a stopword; tokens are lowercased; "blue" is shared.
  EXPECT_FALSE(reg.contains(EntityKind::title_feature, "the"));
  EXPECT_TRUE(reg.contains(EntityKind::title_feature, "blue"));
  EXPECT_TRUE(reg.contains(EntityKind::title_feature, "hammer"));
  // p1 is in-catalog; "ghost" is not and lands in the related_product space.
  EXPECT_TRUE(reg.contains(EntityKind::related_product, "ghost"));
  EXPECT_FALSE(reg.contains(EntityKind::product, "ghost"));

  EXPECT_EQ(count_rel(triples, RelationName::produced_by), 2u);
  EXPECT_EQ(count_rel(triples, RelationName::belong_to), 1u);
  EXPECT_EQ(count_rel(triples, RelationName::also_bought), 2u);
  EXPECT_EQ(count_rel(triples, RelationName::title_sim), 4u);
}

TEST_F(GraphTest, IngestMetadataDeduplicatesTitleTokens) {
  auto path = write_file("meta.jsonl",
      R"({"id": "p1", "title_tokens": ["red", "Red", "RED", "apple"]})" "\n");
  EntityRegistry reg;
  auto triples = ingest_metadata(path, reg);
  EXPECT_EQ(count_rel(triples, RelationName::title_sim), 2u);
}

TEST_F(GraphTest, IngestMetadataRejectsDuplicateIds) {
  auto path = write_file("meta.jsonl",
      R"({"id": "p1"})" "\n" R"({"id": "p1"})" "\n");
  EntityRegistry reg;
  EXPECT_THROW(ingest_metadata(path, reg), std::runtime_error);
}

TEST_F(GraphTest, ImageFeaturesKeepTopKAboveThreshold) {
  auto path = write_file("img.tsv",
      "p1\tlow\t0.5\n"       // == min_conf, excluded (strictly greater wins)
      "p1\ta\t0.9\n"
      "p1\tb\t0.8\n"
      "p1\tc\t0.7\n"
      "unknown\tz\t0.99\n");  // rows for unregistered items are ignored
  EntityRegistry reg;
  reg.get_or_create(EntityKind::product, "p1");
  auto triples = ingest_image_features(path, reg, 0.5, 2);
  ASSERT_EQ(triples.size(), 2u);
  EXPECT_EQ(reg.key_of(triples[0].tail.index), "a");
  EXPECT_EQ(reg.key_of(triples[1].tail.index), "b");
  EXPECT_FALSE(reg.contains(EntityKind::image_feature, "z"));
  EXPECT_FALSE(reg.contains(EntityKind::image_feature, "low"));
}

TEST_F(GraphTest, ImageFeaturesBreakConfidenceTiesByName) {
  auto path = write_file("img.tsv",
      "p1\tzebra\t0.9\n"
      "p1\tapple\t0.9\n");
  EntityRegistry reg;
  reg.get_or_create(EntityKind::product, "p1");
  auto triples = ingest_image_features(path, reg, 0.5, 1);
  ASSERT_EQ(triples.size(), 1u);
  EXPECT_EQ(reg.key_of(triples[0].tail.index), "apple");
}

TEST_F(GraphTest, ImageFeaturesRejectOutOfRangeConfidence) {
  auto path = write_file("img.tsv", "p1\ta\t1.5\n");
  EntityRegistry reg;
  reg.get_or_create(EntityKind::product, "p1");
  EXPECT_THROW(ingest_image_features(path, reg), std::runtime_error);
}

TEST_F(GraphTest, SplitRelationsRenamesOutOfDomainTails) {
  EntityRegistry reg;
  EntityId p1 = reg.get_or_create(EntityKind::product, "p1");
  EntityId p2 = reg.get_or_create(EntityKind::product, "p2");
  EntityId ghost = reg.get_or_create(EntityKind::related_product, "ghost");
  std::vector<Triple> triples = {
      {p1, Relation(RelationName::also_bought), p2},
      {p1, Relation(RelationName::also_bought), ghost},
      {p1, Relation(RelationName::also_viewed), ghost},
      {p1, Relation(RelationName::bought_together), ghost},
      {p1, Relation(RelationName::produced_by),
       reg.get_or_create(EntityKind::brand, "b")},
  };
  std::set<int32_t> domain = {p1.index, p2.index};
  auto out = split_relations(triples, domain);
  ASSERT_EQ(out.size(), triples.size());
  EXPECT_EQ(count_rel(out, RelationName::also_bought), 1u);
  EXPECT_EQ(count_rel(out, RelationName::also_bought_diff), 1u);
  EXPECT_EQ(count_rel(out, RelationName::also_viewed_diff), 1u);
  EXPECT_EQ(count_rel(out, RelationName::bought_together_diff), 1u);
  EXPECT_EQ(count_rel(out, RelationName::produced_by), 1u);
}

TEST_F(GraphTest, MergeCollapsesOverlappingPairs) {
  EntityRegistry reg;
  EntityId p1 = reg.get_or_create(EntityKind::product, "p1");
  EntityId p2 = reg.get_or_create(EntityKind::product, "p2");
  EntityId p3 = reg.get_or_create(EntityKind::product, "p3");
  std::vector<Triple> triples = {
      {p1, Relation(RelationName::also_viewed), p2},
      {p2, Relation(RelationName::also_bought), p1},  // same unordered pair
      {p1, Relation(RelationName::also_viewed), p3},  // viewed only: kept
  };
  MergeStats stats;
  auto out = merge_duplicate_edges(triples, &stats);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(count_rel(out, RelationName::viewed_bought), 1u);
  EXPECT_EQ(count_rel(out, RelationName::also_viewed), 1u);
  EXPECT_EQ(count_rel(out, RelationName::also_bought), 0u);
  // merged head takes the lower index
  for (const auto& t : out) {
    if (t.rel.name == RelationName::viewed_bought) {
      EXPECT_EQ(t.head.index, p1.index);
      EXPECT_EQ(t.tail.index, p2.index);
    }
  }
  EXPECT_EQ(stats.overlap_pairs, 1u);
  EXPECT_EQ(stats.edges_removed, 1u);
  // viewed endpoints {p1,p2,p3}, bought endpoints {p1,p2}
  EXPECT_NEAR(stats.viewed_in_bought, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(stats.bought_in_viewed, 1.0, 1e-12);
}

TEST_F(GraphTest, MergeKeepsProductHeadForDiffFamily) {
  EntityRegistry reg;
  EntityId ghost = reg.get_or_create(EntityKind::related_product, "ghost");
  EntityId p1 = reg.get_or_create(EntityKind::product, "p1");
  std::vector<Triple> triples = {
      {p1, Relation(RelationName::also_viewed_diff), ghost},
      {p1, Relation(RelationName::also_bought_diff), ghost},
  };
  auto out = merge_duplicate_edges(triples);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].rel.name, RelationName::bought_viewed_diff);
  // ghost has the lower registry index but must stay in the tail slot.
  EXPECT_EQ(out[0].head.index, p1.index);
  EXPECT_EQ(out[0].tail.index, ghost.index);
}

TEST_F(GraphTest, CooccurLinksAdjacentSessionItems) {
  EntityRegistry reg;
  EntityId u = reg.get_or_create(EntityKind::user, "u");
  auto p = [&](const std::string& k) {
    return reg.get_or_create(EntityKind::product, k);
  };
  std::vector<Session> sessions;
  sessions.push_back({u, {p("a"), p("b"), p("a"), p("a")}, 0});
  sessions.push_back({u, {p("a"), p("b")}, 1});  // duplicate pair
  auto out = add_cooccur(sessions);
  // (a,b), (b,a); the (a,a) self pair and the repeat (a,b) are skipped.
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].rel.name, RelationName::co_occur);
}

TEST_F(GraphTest, PurchaseTriplesDeduplicate) {
  EntityRegistry reg;
  EntityId u = reg.get_or_create(EntityKind::user, "u");
  auto p = [&](const std::string& k) {
    return reg.get_or_create(EntityKind::product, k);
  };
  std::vector<Session> sessions;
  sessions.push_back({u, {p("a"), p("b"), p("a")}, 0});
  auto out = purchase_triples(sessions);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].rel.name, RelationName::purchase);
  EXPECT_EQ(out[0].head, u);
}

KnowledgeGraph tiny_graph(EntityRegistry& reg) {
  EntityId u = reg.get_or_create(EntityKind::user, "u");
  EntityId p1 = reg.get_or_create(EntityKind::product, "p1");
  EntityId p2 = reg.get_or_create(EntityKind::product, "p2");
  EntityId b = reg.get_or_create(EntityKind::brand, "acme");
  std::vector<Triple> triples = {
      {u, Relation(RelationName::purchase), p1},
      {p1, Relation(RelationName::produced_by), b},
      {p2, Relation(RelationName::produced_by), b},
      // stated as an inverse; finalize must fold it into the forward set
      {b, Relation(RelationName::produced_by, true), p2},
  };
  return KnowledgeGraph::finalize(reg, triples);
}

TEST_F(GraphTest, FinalizeNormalizesInversesAndSortsAdjacency) {
  EntityRegistry reg;
  auto g = tiny_graph(reg);
  // the duplicate inverse statement folds into one forward triple
  EXPECT_EQ(g.forward_triples().size(), 3u);
  EXPECT_EQ(g.forward_count(RelationName::produced_by), 2u);
  EXPECT_EQ(g.directed_edge_count(), 6u);

  EntityId p1 = g.registry().find(EntityKind::product, "p1");
  EntityId b = g.registry().find(EntityKind::brand, "acme");
  EntityId u = g.registry().find(EntityKind::user, "u");
  auto nbrs = g.neighbors(p1.index);
  ASSERT_EQ(nbrs.size(), 2u);
  EXPECT_TRUE(std::is_sorted(nbrs.begin(), nbrs.end()));
  EXPECT_TRUE(g.has_edge(p1.index, Relation(RelationName::produced_by), b.index));
  EXPECT_TRUE(g.has_edge(b.index,
                         Relation(RelationName::produced_by, true), p1.index));
  EXPECT_TRUE(g.has_edge(p1.index,
                         Relation(RelationName::purchase, true), u.index));
  EXPECT_FALSE(g.has_edge(p1.index, Relation(RelationName::purchase), u.index));
  EXPECT_TRUE(g.connected(p1.index, b.index));
  EXPECT_FALSE(g.connected(p1.index, p1.index));

  auto products = g.products();
  ASSERT_EQ(products.size(), 2u);
  EXPECT_LT(products[0].index, products[1].index);
}

TEST_F(GraphTest, FinalizeRejectsSchemaViolations) {
  EntityRegistry reg;
  EntityId u = reg.get_or_create(EntityKind::user, "u");
  EntityId b = reg.get_or_create(EntityKind::brand, "acme");
  std::vector<Triple> bad = {{u, Relation(RelationName::purchase), b}};
  EXPECT_THROW(KnowledgeGraph::finalize(reg, bad), std::runtime_error);
}

TEST_F(GraphTest, FinalizeRejectsDanglingIds) {
  EntityRegistry reg;
  EntityId u = reg.get_or_create(EntityKind::user, "u");
  std::vector<Triple> bad = {
      {u, Relation(RelationName::purchase), EntityId(99, EntityKind::product)}};
  EXPECT_THROW(KnowledgeGraph::finalize(reg, bad), std::runtime_error);
}

TEST_F(GraphTest, SaveLoadRoundTrip) {
  EntityRegistry reg;
  auto g = tiny_graph(reg);
  MergeStats stats;
  stats.overlap_pairs = 3;
  save_graph(g, dir_.string(), &stats);

  auto loaded = load_graph(dir_.string());
  EXPECT_EQ(loaded.entity_count(), g.entity_count());
  EXPECT_EQ(loaded.forward_triples().size(), g.forward_triples().size());
  for (size_t i = 0; i < g.forward_triples().size(); ++i) {
    EXPECT_EQ(loaded.forward_triples()[i], g.forward_triples()[i]);
  }
  for (int32_t e = 0; e < g.entity_count(); ++e) {
    EXPECT_EQ(loaded.registry().key_of(e), g.registry().key_of(e));
    EXPECT_EQ(loaded.registry().kind_of(e), g.registry().kind_of(e));
  }

  std::ifstream stats_in((dir_ / "stats.json").string());
  nlohmann::json j = nlohmann::json::parse(stats_in);
  EXPECT_EQ(j["entity_total"].get<int>(), g.entity_count());
  EXPECT_EQ(j["merge"]["overlap_pairs"].get<int>(), 3);
}

}  // namespace
}  // namespace pathrec
