#pragma once

#include <Eigen/Core>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathrec/graph.hpp"
#include "pathrec/rng.hpp"
#include "pathrec/tensor_io.hpp"

namespace pathrec {

// Pretrained translational entity/relation vectors. Frozen once training
// finishes; an inverse relation is the negation of its forward row.
struct EmbeddingTable {
  Eigen::MatrixXd entity_vecs;    // |E| x d
  Eigen::MatrixXd relation_vecs;  // one row per forward relation name
  int d = 0;

  Eigen::VectorXd lookup(const EntityId& e) const { return lookup(e.index); }

  Eigen::VectorXd lookup(int32_t index) const {
    if (index < 0 || index >= entity_vecs.rows()) {
      throw std::out_of_range("entity index out of embedding range: " +
                              std::to_string(index));
    }
    return entity_vecs.row(index).transpose();
  }

  Eigen::VectorXd lookup_rel(const Relation& r) const {
    int row = static_cast<int>(r.name);
    if (row < 0 || row >= relation_vecs.rows()) {
      throw std::out_of_range("relation out of embedding range");
    }
    Eigen::VectorXd v = relation_vecs.row(row).transpose();
    return r.inverse ? Eigen::VectorXd(-v) : v;
  }
};

// Margin ranking loss on L2 translational distance:
//   max(0, margin + |h + r - t| - |h' + r - t'|)
inline double transe_loss(const Eigen::VectorXd& h, const Eigen::VectorXd& r,
                          const Eigen::VectorXd& t, const Eigen::VectorXd& h2,
                          const Eigen::VectorXd& t2, double margin) {
  if (h.size() != r.size() || h.size() != t.size() || h.size() != h2.size() ||
      h.size() != t2.size()) {
    throw std::invalid_argument("transe_loss: dimension mismatch");
  }
  double pos = (h + r - t).norm();
  double neg = (h2 + r - t2).norm();
  return std::max(0.0, margin + pos - neg);
}

struct TranseGrads {
  Eigen::VectorXd h, r, t, h2, t2;
};

// Analytic gradient of transe_loss; zero everywhere when the hinge is
// inactive. Degenerate zero distances contribute zero direction.
inline TranseGrads transe_loss_grads(const Eigen::VectorXd& h,
                                     const Eigen::VectorXd& r,
                                     const Eigen::VectorXd& t,
                                     const Eigen::VectorXd& h2,
                                     const Eigen::VectorXd& t2, double margin) {
  TranseGrads g;
  g.h = Eigen::VectorXd::Zero(h.size());
  g.r = g.h;
  g.t = g.h;
  g.h2 = g.h;
  g.t2 = g.h;
  Eigen::VectorXd dp = h + r - t;
  Eigen::VectorXd dn = h2 + r - t2;
  double pos = dp.norm();
  double neg = dn.norm();
  if (margin + pos - neg <= 0.0) return g;
  Eigen::VectorXd up = pos > 0 ? Eigen::VectorXd(dp / pos)
                               : Eigen::VectorXd::Zero(h.size());
  Eigen::VectorXd un = neg > 0 ? Eigen::VectorXd(dn / neg)
                               : Eigen::VectorXd::Zero(h.size());
  g.h = up;
  g.t = -up;
  g.h2 = -un;
  g.t2 = un;
  g.r = up - un;
  return g;
}

struct PretrainConfig {
  int d = 100;
  int epochs = 200;
  double lr = 0.01;
  double margin = 1.0;
  uint64_t seed = 0;
};

// SGD over forward triples with uniform head/tail corruption. Entity rows
// are renormalized to unit L2 after every epoch. Single-threaded and fully
// reproducible under the seed. If epoch_losses is given, the mean loss per
// epoch is appended there.
inline EmbeddingTable pretrain(const KnowledgeGraph& graph,
                               const PretrainConfig& cfg,
                               std::vector<double>* epoch_losses = nullptr) {
  if (cfg.d <= 0) throw std::invalid_argument("embedding dimension must be > 0");
  const int32_t n = graph.entity_count();
  if (n == 0) throw std::invalid_argument("empty graph");

  EmbeddingTable table;
  table.d = cfg.d;
  table.entity_vecs.resize(n, cfg.d);
  table.relation_vecs.resize(kRelationNameCount, cfg.d);

  Rng rng(cfg.seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(cfg.d));
  for (int32_t i = 0; i < n; ++i) {
    for (int j = 0; j < cfg.d; ++j) {
      table.entity_vecs(i, j) = rng.next_uniform(-bound, bound);
    }
    double norm = table.entity_vecs.row(i).norm();
    if (norm > 0) table.entity_vecs.row(i) /= norm;
  }
  for (int i = 0; i < kRelationNameCount; ++i) {
    for (int j = 0; j < cfg.d; ++j) {
      table.relation_vecs(i, j) = rng.next_uniform(-bound, bound);
    }
    double norm = table.relation_vecs.row(i).norm();
    if (norm > 0) table.relation_vecs.row(i) /= norm;
  }

  const auto& triples = graph.forward_triples();
  if (triples.empty()) return table;

  std::vector<size_t> order(triples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (size_t pos : order) {
      const Triple& t = triples[pos];
      int32_t h = t.head.index;
      int32_t ta = t.tail.index;
      int rel = static_cast<int>(t.rel.name);

      bool corrupt_head = rng.next_double() < 0.5;
      int32_t corrupted;
      do {
        corrupted = static_cast<int32_t>(rng.next_below(static_cast<uint64_t>(n)));
      } while (corrupted == (corrupt_head ? h : ta));
      int32_t h2 = corrupt_head ? corrupted : h;
      int32_t t2 = corrupt_head ? ta : corrupted;

      Eigen::VectorXd hv = table.entity_vecs.row(h).transpose();
      Eigen::VectorXd rv = table.relation_vecs.row(rel).transpose();
      Eigen::VectorXd tv = table.entity_vecs.row(ta).transpose();
      Eigen::VectorXd h2v = table.entity_vecs.row(h2).transpose();
      Eigen::VectorXd t2v = table.entity_vecs.row(t2).transpose();

      double loss = transe_loss(hv, rv, tv, h2v, t2v, cfg.margin);
      loss_sum += loss;
      if (loss <= 0.0) continue;

      TranseGrads g = transe_loss_grads(hv, rv, tv, h2v, t2v, cfg.margin);
      table.entity_vecs.row(h) -= cfg.lr * g.h.transpose();
      table.entity_vecs.row(ta) -= cfg.lr * g.t.transpose();
      table.relation_vecs.row(rel) -= cfg.lr * g.r.transpose();
      table.entity_vecs.row(h2) -= cfg.lr * g.h2.transpose();
      table.entity_vecs.row(t2) -= cfg.lr * g.t2.transpose();
    }
    for (int32_t i = 0; i < n; ++i) {
      double norm = table.entity_vecs.row(i).norm();
      if (norm > 0) table.entity_vecs.row(i) /= norm;
    }
    if (epoch_losses) {
      epoch_losses->push_back(loss_sum / static_cast<double>(triples.size()));
    }
  }
  return table;
}

// --- persistence ---------------------------------------------------------

namespace embed_io {
inline constexpr char kMagic[8] = {'P', 'R', 'E', 'M', 'B', 'E', 'D', '1'};
}

inline void save_embeddings(const EmbeddingTable& table, const std::string& path,
                            const EntityRegistry& registry,
                            const std::string& index_path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write embeddings: " + path);
  out.write(embed_io::kMagic, 8);
  tensor_io::write_u32(out, static_cast<uint32_t>(table.d));
  tensor_io::write_u32(out, static_cast<uint32_t>(table.entity_vecs.rows()));
  tensor_io::write_u32(out, static_cast<uint32_t>(table.relation_vecs.rows()));
  tensor_io::write_matrix_rows(out, table.entity_vecs);
  tensor_io::write_matrix_rows(out, table.relation_vecs);
  if (!out) throw std::runtime_error("write failed: " + path);

  std::ofstream idx(index_path);
  if (!idx) throw std::runtime_error("cannot write embedding index: " + index_path);
  for (int32_t i = 0; i < registry.size(); ++i) {
    idx << i << "\tentity\t" << to_string(registry.kind_of(i)) << '\t'
        << registry.key_of(i) << '\n';
  }
  for (int i = 0; i < kRelationNameCount; ++i) {
    idx << i << "\trelation\t-\t" << to_string(static_cast<RelationName>(i))
        << '\n';
  }
}

inline EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embeddings: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, embed_io::kMagic, 8) != 0) {
    throw std::runtime_error("bad embedding file magic in " + path);
  }
  EmbeddingTable table;
  table.d = static_cast<int>(tensor_io::read_u32(in));
  uint32_t n_ent = tensor_io::read_u32(in);
  uint32_t n_rel = tensor_io::read_u32(in);
  table.entity_vecs.resize(n_ent, table.d);
  table.relation_vecs.resize(n_rel, table.d);
  tensor_io::read_matrix_rows(in, table.entity_vecs);
  tensor_io::read_matrix_rows(in, table.relation_vecs);
  return table;
}

}  // namespace pathrec
