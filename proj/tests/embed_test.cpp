#include "pathrec/embedding.hpp"

#include <gtest/gtest.h>

#include <filesystem>

namespace pathrec {
namespace {

namespace fs = std::filesystem;

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(EmbedTest, TranseLossMatchesDefinition) {
  // pos distance 1 along x, neg distance 2 -> max(0, 1 + 1 - 2) = 0
  auto h = vec({0, 0}), r = vec({1, 0}), t = vec({2, 0});
  auto h2 = vec({0, 0}), t2 = vec({3, 0});
  EXPECT_DOUBLE_EQ(transe_loss(h, r, t, h2, t2, 1.0), 0.0);
  // neg distance 1.5 -> 1 + 1 - 1.5 = 0.5
  EXPECT_DOUBLE_EQ(transe_loss(h, r, t, h2, vec({2.5, 0}), 1.0), 0.5);
  // perfect positive, neg distance 0.4 -> 1 + 0 - 0.4 = 0.6
  EXPECT_NEAR(transe_loss(vec({1, 1}), vec({1, 0}), vec({2, 1}), vec({1, 1}),
                          vec({2.4, 1}), 1.0),
              0.6, 1e-12);
}

TEST(EmbedTest, TranseLossRejectsDimMismatch) {
  EXPECT_THROW(
      transe_loss(vec({1, 2}), vec({1}), vec({1, 2}), vec({1, 2}), vec({1, 2}), 1.0),
      std::invalid_argument);
}

TEST(EmbedTest, TranseGradsZeroWhenHingeInactive) {
  auto h = vec({0, 0}), r = vec({1, 0}), t = vec({1, 0});
  auto h2 = vec({0, 0}), t2 = vec({9, 0});
  auto g = transe_loss_grads(h, r, t, h2, t2, 1.0);
  EXPECT_DOUBLE_EQ(g.h.norm(), 0.0);
  EXPECT_DOUBLE_EQ(g.r.norm(), 0.0);
  EXPECT_DOUBLE_EQ(g.t2.norm(), 0.0);
}

TEST(EmbedTest, TranseGradsMatchFiniteDifferences) {
  Rng rng(11);
  auto rand_vec = [&](int d) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.next_gaussian(0.0, 0.5);
    return v;
  };
  const int d = 4;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd h = rand_vec(d), r = rand_vec(d), t = rand_vec(d),
                    h2 = rand_vec(d), t2 = rand_vec(d);
    double margin = 1.0;
    if (transe_loss(h, r, t, h2, t2, margin) <= 1e-3) continue;  // near kink
    auto g = transe_loss_grads(h, r, t, h2, t2, margin);

    const double eps = 1e-6;
    auto check = [&](Eigen::VectorXd& target, const Eigen::VectorXd& grad) {
      for (int i = 0; i < d; ++i) {
        double orig = target(i);
        target(i) = orig + eps;
        double up = transe_loss(h, r, t, h2, t2, margin);
        target(i) = orig - eps;
        double dn = transe_loss(h, r, t, h2, t2, margin);
        target(i) = orig;
        double fd = (up - dn) / (2.0 * eps);
        EXPECT_NEAR(grad(i), fd, 1e-5 * std::max(1.0, std::abs(fd)));
      }
    };
    check(h, g.h);
    check(r, g.r);
    check(t, g.t);
    check(h2, g.h2);
    check(t2, g.t2);
  }
}

KnowledgeGraph demo_graph() {
  EntityRegistry reg;
  EntityId u1 = reg.get_or_create(EntityKind::user, "u1");
  EntityId u2 = reg.get_or_create(EntityKind::user, "u2");
  std::vector<EntityId> p;
  for (int i = 0; i < 6; ++i) {
    p.push_back(reg.get_or_create(EntityKind::product, "p" + std::to_string(i)));
  }
  EntityId b1 = reg.get_or_create(EntityKind::brand, "b1");
  EntityId b2 = reg.get_or_create(EntityKind::brand, "b2");
  std::vector<Triple> triples;
  for (int i = 0; i < 6; ++i) {
    triples.emplace_back(i % 2 == 0 ? u1 : u2, Relation(RelationName::purchase),
                         p[static_cast<size_t>(i)]);
    triples.emplace_back(p[static_cast<size_t>(i)],
                         Relation(RelationName::produced_by), i < 3 ? b1 : b2);
  }
  for (int i = 0; i < 5; ++i) {
    triples.emplace_back(p[static_cast<size_t>(i)],
                         Relation(RelationName::co_occur),
                         p[static_cast<size_t>(i + 1)]);
  }
  return KnowledgeGraph::finalize(std::move(reg), triples);
}

TEST(EmbedTest, PretrainIsDeterministicAndNormalized) {
  auto g = demo_graph();
  PretrainConfig cfg;
  cfg.d = 8;
  cfg.epochs = 5;
  cfg.seed = 3;
  auto a = pretrain(g, cfg);
  auto b = pretrain(g, cfg);
  EXPECT_TRUE(a.entity_vecs.isApprox(b.entity_vecs, 0.0));
  EXPECT_TRUE(a.relation_vecs.isApprox(b.relation_vecs, 0.0));
  for (Eigen::Index i = 0; i < a.entity_vecs.rows(); ++i) {
    EXPECT_NEAR(a.entity_vecs.row(i).norm(), 1.0, 1e-12);
  }
  cfg.seed = 4;
  auto c = pretrain(g, cfg);
  EXPECT_FALSE(a.entity_vecs.isApprox(c.entity_vecs, 1e-12));
}

TEST(EmbedTest, PretrainLossTrendsDown) {
  auto g = demo_graph();
  PretrainConfig cfg;
  cfg.d = 16;
  cfg.epochs = 40;
  cfg.lr = 0.05;
  cfg.seed = 0;
  std::vector<double> losses;
  pretrain(g, cfg, &losses);
  ASSERT_EQ(losses.size(), 40u);
  double head = (losses[0] + losses[1] + losses[2]) / 3.0;
  double tail = (losses[37] + losses[38] + losses[39]) / 3.0;
  EXPECT_LT(tail, head);
}

TEST(EmbedTest, LookupBoundsAndInverseNegation) {
  auto g = demo_graph();
  PretrainConfig cfg;
  cfg.d = 4;
  cfg.epochs = 1;
  auto table = pretrain(g, cfg);
  EXPECT_EQ(table.lookup(0).size(), 4);
  EXPECT_THROW(table.lookup(-1), std::out_of_range);
  EXPECT_THROW(table.lookup(table.entity_vecs.rows()), std::out_of_range);

  Relation fwd(RelationName::co_occur);
  Eigen::VectorXd f = table.lookup_rel(fwd);
  Eigen::VectorXd inv = table.lookup_rel(fwd.twin());
  EXPECT_TRUE((f + inv).isZero(0.0));
}

TEST(EmbedTest, SaveLoadRoundTrip) {
  auto g = demo_graph();
  PretrainConfig cfg;
  cfg.d = 6;
  cfg.epochs = 2;
  auto table = pretrain(g, cfg);

  auto dir = fs::temp_directory_path() / "pathrec_embed_test";
  fs::create_directories(dir);
  std::string path = (dir / "emb.bin").string();
  std::string idx = (dir / "emb.tsv").string();
  save_embeddings(table, path, g.registry(), idx);
  auto loaded = load_embeddings(path);
  EXPECT_EQ(loaded.d, 6);
  EXPECT_EQ(loaded.entity_vecs.rows(), table.entity_vecs.rows());
  // f32 narrowing: compare at single precision.
  EXPECT_TRUE(loaded.entity_vecs.isApprox(table.entity_vecs, 1e-6));

  std::ifstream idx_in(idx);
  std::string first;
  std::getline(idx_in, first);
  EXPECT_EQ(first.rfind("0\tentity\t", 0), 0u);
  size_t lines = 1;
  std::string line;
  while (std::getline(idx_in, line)) ++lines;
  EXPECT_EQ(lines, static_cast<size_t>(g.registry().size()) + kRelationNameCount);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace pathrec
