#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathrec/embedding.hpp"
#include "pathrec/graph.hpp"
#include "pathrec/mathutil.hpp"
#include "pathrec/rng.hpp"
#include "pathrec/tensor_io.hpp"

namespace pathrec {

struct Action {
  Relation rel;
  EntityId entity;
};

// Outgoing edges a walker may take, plausibility-ordered, capped at a_max.
struct ActionSpace {
  std::vector<Action> actions;
  size_t size() const { return actions.size(); }
};

struct PathState {
  Eigen::VectorXd s_se;
  Eigen::VectorXd s_start;
  Eigen::VectorXd s_curr;
  int t = 0;
};

// Concatenation s_se + s_start + s_curr in that order.
inline Eigen::VectorXd assemble_state(const Eigen::VectorXd& s_se,
                                      const Eigen::VectorXd& s_start,
                                      const Eigen::VectorXd& s_curr) {
  if (s_start.size() != s_curr.size()) {
    throw std::invalid_argument("state slots for start/current entity differ in size");
  }
  Eigen::VectorXd out(s_se.size() + s_start.size() + s_curr.size());
  out << s_se, s_start, s_curr;
  return out;
}

inline Eigen::VectorXd assemble_state(const PathState& st) {
  return assemble_state(st.s_se, st.s_start, st.s_curr);
}

struct PolicyDims {
  int d = 100;      // KG embedding dim
  int d_se = 100;   // session state dim
  int d_proj = 100; // shared projection dim
};

// Bilinear scoring weights for both levels, plus linear value heads.
// W3/W4 are shared by the long and short walks. Weight layout is
// (input x d_proj): a score is (feat' * Wa) . (state' * Ws).
struct PolicyParams {
  PolicyDims dims;
  TensorBag params;

  static PolicyParams init(const PolicyDims& dims, Rng& rng) {
    if (dims.d <= 0 || dims.d_se <= 0 || dims.d_proj <= 0) {
      throw std::invalid_argument("policy dims must be positive");
    }
    PolicyParams p;
    p.dims = dims;
    auto gauss = [&rng](int r, int c) {
      Eigen::MatrixXd m(r, c);
      double sd = 1.0 / std::sqrt(static_cast<double>(r));
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = rng.next_gaussian(0.0, sd);
      return m;
    };
    int d_state = dims.d_se + 2 * dims.d;
    p.params.add("W1", gauss(dims.d, dims.d_proj));
    p.params.add("W2", gauss(dims.d_se, dims.d_proj));
    p.params.add("W3", gauss(2 * dims.d, dims.d_proj));
    p.params.add("W4", gauss(d_state, dims.d_proj));
    p.params.add("v_se", Eigen::MatrixXd::Zero(dims.d_se, 1));
    p.params.add("v_path", Eigen::MatrixXd::Zero(d_state, 1));
    return p;
  }
};

enum class ValueLevel { session, path };

inline double value(const PolicyParams& p, const Eigen::VectorXd& state,
                    ValueLevel level) {
  const Eigen::MatrixXd& head =
      p.params.at(level == ValueLevel::session ? "v_se" : "v_path");
  if (head.rows() != state.size()) {
    throw std::invalid_argument("value head / state dimension mismatch");
  }
  return head.col(0).dot(state);
}

// A policy evaluation plus the cached features needed for its gradient.
struct PolicyEval {
  Eigen::VectorXd probs;
  std::vector<Eigen::VectorXd> feats;  // per-action feature vectors
  Eigen::VectorXd state;               // state vector fed to the state-side weight
};

namespace detail {

inline PolicyEval bilinear_policy(const PolicyParams& p, const std::string& wa,
                                  const std::string& ws,
                                  std::vector<Eigen::VectorXd> feats,
                                  Eigen::VectorXd state) {
  const Eigen::MatrixXd& Wa = p.params.at(wa);
  const Eigen::MatrixXd& Ws = p.params.at(ws);
  if (Ws.rows() != state.size()) {
    throw std::invalid_argument(ws + " expects state dim " +
                                std::to_string(Ws.rows()) + ", got " +
                                std::to_string(state.size()));
  }
  Eigen::VectorXd proj_state = Ws.transpose() * state;
  Eigen::VectorXd scores(static_cast<Eigen::Index>(feats.size()));
  for (size_t i = 0; i < feats.size(); ++i) {
    if (Wa.rows() != feats[i].size()) {
      throw std::invalid_argument(wa + " expects feature dim " +
                                  std::to_string(Wa.rows()));
    }
    scores(static_cast<Eigen::Index>(i)) =
        (Wa.transpose() * feats[i]).dot(proj_state);
  }
  PolicyEval ev;
  ev.probs = softmax(scores);
  ev.feats = std::move(feats);
  ev.state = std::move(state);
  return ev;
}

}  // namespace detail

inline PolicyEval session_policy(const PolicyParams& p,
                                 const Eigen::VectorXd& s_se,
                                 const std::vector<EntityId>& candidates,
                                 const EmbeddingTable& table) {
  if (candidates.empty()) throw std::invalid_argument("no session candidates");
  std::vector<Eigen::VectorXd> feats;
  feats.reserve(candidates.size());
  for (const EntityId& c : candidates) feats.push_back(table.lookup(c));
  return detail::bilinear_policy(p, "W1", "W2", std::move(feats), s_se);
}

inline Eigen::VectorXd action_feature(const EmbeddingTable& table,
                                      const Action& a) {
  Eigen::VectorXd r = table.lookup_rel(a.rel);
  Eigen::VectorXd e = table.lookup(a.entity);
  Eigen::VectorXd f(r.size() + e.size());
  f << r, e;
  return f;
}

inline PolicyEval path_policy(const PolicyParams& p, const PathState& st,
                              const ActionSpace& actions,
                              const EmbeddingTable& table) {
  if (actions.actions.empty()) throw std::invalid_argument("empty action space");
  std::vector<Eigen::VectorXd> feats;
  feats.reserve(actions.actions.size());
  for (const Action& a : actions.actions) feats.push_back(action_feature(table, a));
  return detail::bilinear_policy(p, "W3", "W4", std::move(feats),
                                 assemble_state(st));
}

// Accumulate coeff * d(ln pi(chosen))/dW into grads for the weight pair that
// produced `ev` ("W1"/"W2" for the session level, "W3"/"W4" for the path
// level). The softmax Jacobian gives
//   d ln pi_i / dWa = (f_i - sum_j pi_j f_j) (Ws' s)'
//   d ln pi_i / dWs = s (u_i - sum_j pi_j u_j)'   with u_j = Wa' f_j.
inline void add_logpi_grads(const PolicyParams& p, const PolicyEval& ev,
                            int chosen, const std::string& wa,
                            const std::string& ws, double coeff,
                            TensorBag& grads) {
  if (chosen < 0 || chosen >= static_cast<int>(ev.feats.size())) {
    throw std::out_of_range("chosen action index out of range");
  }
  const Eigen::MatrixXd& Wa = p.params.at(wa);
  const Eigen::MatrixXd& Ws = p.params.at(ws);
  Eigen::VectorXd proj_state = Ws.transpose() * ev.state;
  Eigen::VectorXd mean_feat = Eigen::VectorXd::Zero(ev.feats[0].size());
  Eigen::VectorXd mean_u = Eigen::VectorXd::Zero(Wa.cols());
  for (size_t j = 0; j < ev.feats.size(); ++j) {
    double pj = ev.probs(static_cast<Eigen::Index>(j));
    mean_feat += pj * ev.feats[j];
    mean_u += pj * (Wa.transpose() * ev.feats[j]);
  }
  Eigen::VectorXd u_chosen = Wa.transpose() * ev.feats[static_cast<size_t>(chosen)];
  grads.at(wa) +=
      coeff * (ev.feats[static_cast<size_t>(chosen)] - mean_feat) *
      proj_state.transpose();
  grads.at(ws) += coeff * ev.state * (u_chosen - mean_u).transpose();
}

// All outgoing edges (inverses included), ranked by translational
// plausibility -|emb(cur) + emb(rel) - emb(ent)|, capped at a_max. In train
// mode each action except the top-ranked one is independently dropped with
// the given probability.
inline ActionSpace build_action_space(const KnowledgeGraph& graph,
                                      const EntityId& current,
                                      const EmbeddingTable& table,
                                      int a_max = 200, bool train_mode = false,
                                      double dropout = 0.7, Rng* rng = nullptr) {
  if (a_max < 1) throw std::invalid_argument("a_max must be >= 1");
  if (train_mode && !rng) {
    throw std::invalid_argument("train-mode action space needs an RNG");
  }
  auto edges = graph.neighbors(current.index);
  if (edges.empty()) {
    throw std::runtime_error("malformed graph: entity " +
                             std::to_string(current.index) +
                             " has no outgoing edges");
  }
  Eigen::VectorXd cur_vec = table.lookup(current);
  struct Scored {
    double plaus;
    Action action;
  };
  std::vector<Scored> scored;
  scored.reserve(edges.size());
  for (const auto& e : edges) {
    double dist = (cur_vec + table.lookup_rel(e.rel) - table.lookup(e.tail)).norm();
    scored.push_back({-dist, Action{e.rel, graph.registry().id(e.tail)}});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.plaus != b.plaus) return a.plaus > b.plaus;
    if (a.action.rel.directed_id() != b.action.rel.directed_id()) {
      return a.action.rel.directed_id() < b.action.rel.directed_id();
    }
    return a.action.entity.index < b.action.entity.index;
  });
  if (static_cast<int>(scored.size()) > a_max) {
    scored.resize(static_cast<size_t>(a_max));
  }
  ActionSpace out;
  out.actions.reserve(scored.size());
  for (size_t i = 0; i < scored.size(); ++i) {
    if (train_mode && i > 0 && rng->next_double() < dropout) continue;
    out.actions.push_back(scored[i].action);
  }
  return out;
}

}  // namespace pathrec
