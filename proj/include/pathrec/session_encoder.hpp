#pragma once

#include <Eigen/Core>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathrec/graph.hpp"
#include "pathrec/mathutil.hpp"
#include "pathrec/rng.hpp"
#include "pathrec/tensor_io.hpp"

namespace pathrec {

// Dense row numbering for the recommendable item universe (products/movies).
class ProductVocab {
 public:
  static ProductVocab from_items(std::vector<EntityId> items) {
    ProductVocab v;
    v.items_ = std::move(items);
    for (size_t i = 0; i < v.items_.size(); ++i) {
      auto [it, fresh] =
          v.row_by_index_.emplace(v.items_[i].index, static_cast<int32_t>(i));
      if (!fresh) throw std::invalid_argument("duplicate item in vocabulary");
    }
    return v;
  }

  static ProductVocab from_graph(const KnowledgeGraph& graph) {
    return from_items(graph.products());
  }

  int32_t size() const { return static_cast<int32_t>(items_.size()); }

  bool contains(const EntityId& e) const {
    return row_by_index_.count(e.index) > 0;
  }

  int32_t row_of(const EntityId& e) const {
    auto it = row_by_index_.find(e.index);
    if (it == row_by_index_.end()) {
      throw std::out_of_range("item not in vocabulary: entity " +
                              std::to_string(e.index));
    }
    return it->second;
  }

  const EntityId& item_at(int32_t row) const {
    if (row < 0 || row >= size()) throw std::out_of_range("vocab row out of range");
    return items_[static_cast<size_t>(row)];
  }

 private:
  std::vector<EntityId> items_;
  std::map<int32_t, int32_t> row_by_index_;
};

enum class EncoderKind { recurrent, attention };

inline std::string to_string(EncoderKind k) {
  return k == EncoderKind::recurrent ? "recurrent" : "attention";
}

inline EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "recurrent") return EncoderKind::recurrent;
  if (s == "attention") return EncoderKind::attention;
  throw std::invalid_argument("unknown encoder kind: " + s);
}

struct EncoderState {
  Eigen::VectorXd s_se;
  Eigen::VectorXd item_scores;  // logits over the product vocabulary
};

// Item embeddings + either a gated recurrent cell or a last-item-keyed
// attention layer, plus the output projection. All tensors live in one bag
// so persistence and Adam state reuse the same machinery.
struct EncoderWeights {
  EncoderKind kind = EncoderKind::recurrent;
  int d_se = 0;
  TensorBag params;

  static EncoderWeights init(EncoderKind kind, int vocab, int d_se, Rng& rng) {
    if (vocab <= 0 || d_se <= 0) {
      throw std::invalid_argument("encoder dims must be positive");
    }
    EncoderWeights w;
    w.kind = kind;
    w.d_se = d_se;
    auto gauss = [&rng](int r, int c, double sd) {
      Eigen::MatrixXd m(r, c);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = rng.next_gaussian(0.0, sd);
      return m;
    };
    double sd = 1.0 / std::sqrt(static_cast<double>(d_se));
    w.params.add("emb", gauss(vocab, d_se, 0.1));
    if (kind == EncoderKind::recurrent) {
      for (const char* n : {"Wz", "Uz", "Wr", "Ur", "Wh", "Uh"}) {
        w.params.add(n, gauss(d_se, d_se, sd));
      }
      for (const char* n : {"bz", "br", "bh"}) {
        w.params.add(n, Eigen::MatrixXd::Zero(d_se, 1));
      }
    } else {
      w.params.add("Wq", gauss(d_se, d_se, sd));
      w.params.add("Wk", gauss(d_se, d_se, sd));
    }
    w.params.add("P", gauss(vocab, d_se, 0.1));
    return w;
  }

  int vocab_size() const {
    return static_cast<int>(params.at("emb").rows());
  }
};

// Everything the backward pass needs from a forward pass.
struct EncoderCache {
  std::vector<int32_t> rows;
  std::vector<Eigen::VectorXd> x;
  // recurrent
  std::vector<Eigen::VectorXd> h, z, r, c;
  // attention
  Eigen::VectorXd alpha, q;
  std::vector<Eigen::VectorXd> k;
  Eigen::VectorXd s_se;
};

namespace detail {

inline void encoder_forward(const EncoderWeights& w, const ProductVocab& vocab,
                            const std::vector<EntityId>& prefix,
                            EncoderCache& cache) {
  if (prefix.empty()) throw std::invalid_argument("empty session prefix");
  const Eigen::MatrixXd& emb = w.params.at("emb");
  cache = EncoderCache{};
  for (const EntityId& item : prefix) {
    int32_t row = vocab.row_of(item);
    cache.rows.push_back(row);
    cache.x.push_back(emb.row(row).transpose());
  }
  const size_t n = prefix.size();
  if (w.kind == EncoderKind::recurrent) {
    const Eigen::MatrixXd& Wz = w.params.at("Wz");
    const Eigen::MatrixXd& Uz = w.params.at("Uz");
    const Eigen::MatrixXd& Wr = w.params.at("Wr");
    const Eigen::MatrixXd& Ur = w.params.at("Ur");
    const Eigen::MatrixXd& Wh = w.params.at("Wh");
    const Eigen::MatrixXd& Uh = w.params.at("Uh");
    const Eigen::VectorXd bz = w.params.at("bz").col(0);
    const Eigen::VectorXd br = w.params.at("br").col(0);
    const Eigen::VectorXd bh = w.params.at("bh").col(0);
    Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(w.d_se);
    for (size_t t = 0; t < n; ++t) {
      const Eigen::VectorXd& x = cache.x[t];
      Eigen::VectorXd z =
          (Wz * x + Uz * h_prev + bz).unaryExpr([](double v) { return sigmoid(v); });
      Eigen::VectorXd r =
          (Wr * x + Ur * h_prev + br).unaryExpr([](double v) { return sigmoid(v); });
      Eigen::VectorXd c = (Wh * x + Uh * (r.cwiseProduct(h_prev)) + bh)
                              .unaryExpr([](double v) { return std::tanh(v); });
      Eigen::VectorXd h =
          (Eigen::VectorXd::Ones(w.d_se) - z).cwiseProduct(h_prev) +
          z.cwiseProduct(c);
      cache.z.push_back(z);
      cache.r.push_back(r);
      cache.c.push_back(c);
      cache.h.push_back(h);
      h_prev = h;
    }
    cache.s_se = h_prev;
  } else {
    const Eigen::MatrixXd& Wq = w.params.at("Wq");
    const Eigen::MatrixXd& Wk = w.params.at("Wk");
    cache.q = Wq * cache.x.back();
    Eigen::VectorXd scores(n);
    for (size_t i = 0; i < n; ++i) {
      cache.k.push_back(Wk * cache.x[i]);
      scores(static_cast<Eigen::Index>(i)) = cache.k[i].dot(cache.q);
    }
    cache.alpha = softmax(scores);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(w.d_se);
    for (size_t i = 0; i < n; ++i) {
      s += cache.alpha(static_cast<Eigen::Index>(i)) * cache.x[i];
    }
    cache.s_se = s;
  }
}

}  // namespace detail

inline EncoderState encode(const EncoderWeights& w, const ProductVocab& vocab,
                           const std::vector<EntityId>& prefix,
                           EncoderCache* cache_out = nullptr) {
  EncoderCache cache;
  detail::encoder_forward(w, vocab, prefix, cache);
  EncoderState st;
  st.s_se = cache.s_se;
  st.item_scores = w.params.at("P") * cache.s_se;
  if (cache_out) *cache_out = std::move(cache);
  return st;
}

// Pointwise BCE over the whole vocabulary: one positive, the rest negative.
inline double ce_loss(const Eigen::VectorXd& item_scores, int32_t target_row) {
  if (target_row < 0 || target_row >= item_scores.size()) {
    throw std::out_of_range("target row outside vocabulary");
  }
  double loss = 0.0;
  for (Eigen::Index j = 0; j < item_scores.size(); ++j) {
    loss += bce_with_logits(item_scores(j), j == target_row ? 1.0 : 0.0);
  }
  return loss;
}

inline Eigen::VectorXd ce_dlogits(const Eigen::VectorXd& item_scores,
                                  int32_t target_row) {
  Eigen::VectorXd g(item_scores.size());
  for (Eigen::Index j = 0; j < item_scores.size(); ++j) {
    g(j) = sigmoid(item_scores(j)) - (j == target_row ? 1.0 : 0.0);
  }
  return g;
}

// Backpropagate dL/dlogits through projection and encoder into `grads`
// (a zeros_like-compatible bag; contributions are accumulated).
inline void encoder_backward(const EncoderWeights& w, const EncoderCache& cache,
                             const Eigen::VectorXd& dlogits, TensorBag& grads) {
  const Eigen::MatrixXd& P = w.params.at("P");
  grads.at("P") += dlogits * cache.s_se.transpose();
  Eigen::VectorXd ds = P.transpose() * dlogits;
  Eigen::MatrixXd& demb = grads.at("emb");
  const size_t n = cache.x.size();

  if (w.kind == EncoderKind::recurrent) {
    const Eigen::MatrixXd& Uz = w.params.at("Uz");
    const Eigen::MatrixXd& Ur = w.params.at("Ur");
    const Eigen::MatrixXd& Uh = w.params.at("Uh");
    const Eigen::MatrixXd& Wz = w.params.at("Wz");
    const Eigen::MatrixXd& Wr = w.params.at("Wr");
    const Eigen::MatrixXd& Wh = w.params.at("Wh");
    Eigen::VectorXd dh = ds;
    for (size_t ti = n; ti-- > 0;) {
      const Eigen::VectorXd& x = cache.x[ti];
      const Eigen::VectorXd& z = cache.z[ti];
      const Eigen::VectorXd& r = cache.r[ti];
      const Eigen::VectorXd& c = cache.c[ti];
      Eigen::VectorXd h_prev = ti == 0 ? Eigen::VectorXd::Zero(w.d_se)
                                       : cache.h[ti - 1];
      Eigen::VectorXd dz = dh.cwiseProduct(c - h_prev);
      Eigen::VectorXd dc = dh.cwiseProduct(z);
      Eigen::VectorXd dh_prev =
          dh.cwiseProduct(Eigen::VectorXd::Ones(w.d_se) - z);

      Eigen::VectorXd dc_pre =
          dc.cwiseProduct(Eigen::VectorXd::Ones(w.d_se) - c.cwiseProduct(c));
      grads.at("Wh") += dc_pre * x.transpose();
      grads.at("Uh") += dc_pre * (r.cwiseProduct(h_prev)).transpose();
      grads.at("bh").col(0) += dc_pre;
      Eigen::VectorXd back_h = Uh.transpose() * dc_pre;
      Eigen::VectorXd dr = back_h.cwiseProduct(h_prev);
      dh_prev += back_h.cwiseProduct(r);

      Eigen::VectorXd dz_pre = dz.cwiseProduct(z).cwiseProduct(
          Eigen::VectorXd::Ones(w.d_se) - z);
      grads.at("Wz") += dz_pre * x.transpose();
      grads.at("Uz") += dz_pre * h_prev.transpose();
      grads.at("bz").col(0) += dz_pre;
      dh_prev += Uz.transpose() * dz_pre;

      Eigen::VectorXd dr_pre = dr.cwiseProduct(r).cwiseProduct(
          Eigen::VectorXd::Ones(w.d_se) - r);
      grads.at("Wr") += dr_pre * x.transpose();
      grads.at("Ur") += dr_pre * h_prev.transpose();
      grads.at("br").col(0) += dr_pre;
      dh_prev += Ur.transpose() * dr_pre;

      Eigen::VectorXd dx =
          Wz.transpose() * dz_pre + Wr.transpose() * dr_pre + Wh.transpose() * dc_pre;
      demb.row(cache.rows[ti]) += dx.transpose();
      dh = dh_prev;
    }
  } else {
    const Eigen::MatrixXd& Wq = w.params.at("Wq");
    const Eigen::MatrixXd& Wk = w.params.at("Wk");
    std::vector<Eigen::VectorXd> dx(n, Eigen::VectorXd::Zero(w.d_se));
    Eigen::VectorXd dalpha(n);
    for (size_t i = 0; i < n; ++i) {
      dalpha(static_cast<Eigen::Index>(i)) = ds.dot(cache.x[i]);
      dx[i] += cache.alpha(static_cast<Eigen::Index>(i)) * ds;
    }
    double mix = cache.alpha.dot(dalpha);
    Eigen::VectorXd dscore =
        cache.alpha.cwiseProduct(dalpha - Eigen::VectorXd::Constant(
                                              static_cast<Eigen::Index>(n), mix));
    Eigen::VectorXd dq = Eigen::VectorXd::Zero(w.d_se);
    for (size_t i = 0; i < n; ++i) {
      double g = dscore(static_cast<Eigen::Index>(i));
      dq += g * cache.k[i];
      Eigen::VectorXd dk = g * cache.q;
      grads.at("Wk") += dk * cache.x[i].transpose();
      dx[i] += Wk.transpose() * dk;
    }
    grads.at("Wq") += dq * cache.x.back().transpose();
    dx[n - 1] += Wq.transpose() * dq;
    for (size_t i = 0; i < n; ++i) {
      demb.row(cache.rows[i]) += dx[i].transpose();
    }
  }
}

}  // namespace pathrec
