#pragma once

#include <Eigen/Core>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathrec/corpus.hpp"
#include "pathrec/embedding.hpp"
#include "pathrec/graph.hpp"
#include "pathrec/policy.hpp"
#include "pathrec/rewards.hpp"
#include "pathrec/rng.hpp"
#include "pathrec/session_encoder.hpp"
#include "pathrec/tensor_io.hpp"

namespace pathrec {

// Discounted returns: G_{M-1} = R_M, G_t = R_{t+1} + gamma * G_{t+1}.
inline std::vector<double> returns(const std::vector<double>& rewards,
                                   double gamma) {
  if (rewards.empty()) throw std::invalid_argument("empty reward list");
  std::vector<double> g(rewards.size());
  g.back() = rewards.back();
  for (size_t i = rewards.size() - 1; i-- > 0;) {
    g[i] = rewards[i] + gamma * g[i + 1];
  }
  return g;
}

struct EpisodeStep {
  PolicyEval ev;
  int action = -1;
  double log_prob = 0.0;
  double reward = 0.0;  // received after taking the action
};

struct Episode {
  enum class StartKind { long_walk, short_walk };
  StartKind start_kind = StartKind::long_walk;
  std::vector<EpisodeStep> steps;  // exactly 2 when complete
  EntityId start;
  EntityId terminal;

  std::vector<double> rewards() const {
    std::vector<double> r;
    r.reserve(steps.size());
    for (const auto& s : steps) r.push_back(s.reward);
    return r;
  }
};

// The session-level agent's single decision for one instance.
struct SessionDecision {
  PolicyEval ev;
  int action = -1;
  double log_prob = 0.0;
};

struct TrainConfig {
  double lr = 1e-3;
  double alpha = 0.01;
  double beta = 0.005;
  double gamma = 0.99;
  int epochs = 50;
  int batch_size = 256;
  uint64_t seed = 0;
  int T = 5;
  double reward_eps = 1e-8;
  int a_max = 200;
  double action_dropout = 0.7;
  bool use_session_agent = true;    // off: train on the Item_Short walk only
  bool use_midpoint_reward = true;  // off: intermediate reward is always 0

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
      throw std::invalid_argument("gamma must lie in (0, 1]");
    }
    if (alpha < 0.0 || beta < 0.0) {
      throw std::invalid_argument("alpha and beta must be >= 0");
    }
    if (lr <= 0.0) throw std::invalid_argument("lr must be > 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(action_dropout >= 0.0 && action_dropout < 1.0)) {
      throw std::invalid_argument("action_dropout must lie in [0, 1)");
    }
    if (T < 1) throw std::invalid_argument("T must be >= 1");
    if (a_max < 1) throw std::invalid_argument("a_max must be >= 1");
  }
};

// Actor-critic loss for one walk: for each step,
//   (v(s_t) - G_t) * ln pi(a_t | s_t)  +  1/2 (v(s_t) - G_t)^2
// with the advantage treated as a constant in the policy term.
inline double path_loss(const Episode& ep, const PolicyParams& params,
                        double gamma) {
  std::vector<double> g = returns(ep.rewards(), gamma);
  double loss = 0.0;
  for (size_t t = 0; t < ep.steps.size(); ++t) {
    double adv = value(params, ep.steps[t].ev.state, ValueLevel::path) - g[t];
    loss += adv * ep.steps[t].log_prob + 0.5 * adv * adv;
  }
  return loss;
}

inline void path_loss_add_grads(const Episode& ep, const PolicyParams& params,
                                double gamma, double coeff, TensorBag& grads) {
  std::vector<double> g = returns(ep.rewards(), gamma);
  for (size_t t = 0; t < ep.steps.size(); ++t) {
    const EpisodeStep& st = ep.steps[t];
    double adv = value(params, st.ev.state, ValueLevel::path) - g[t];
    add_logpi_grads(params, st.ev, st.action, "W3", "W4", coeff * adv, grads);
    grads.at("v_path").col(0) += coeff * adv * st.ev.state;
  }
}

// Session-level loss; g_last is G_{M-1} of the long walk.
inline double session_loss(const SessionDecision& dec, double g_last,
                           const PolicyParams& params) {
  double adv = value(params, dec.ev.state, ValueLevel::session) - g_last;
  return adv * dec.log_prob + 0.5 * adv * adv;
}

inline void session_loss_add_grads(const SessionDecision& dec, double g_last,
                                   const PolicyParams& params, double coeff,
                                   TensorBag& grads) {
  double adv = value(params, dec.ev.state, ValueLevel::session) - g_last;
  add_logpi_grads(params, dec.ev, dec.action, "W1", "W2", coeff * adv, grads);
  grads.at("v_se").col(0) += coeff * adv * dec.ev.state;
}

// Standard Adam over a named tensor bag.
class Adam {
 public:
  Adam() = default;
  Adam(const TensorBag& shape, double lr, double b1 = 0.9, double b2 = 0.999,
       double eps = 1e-8)
      : m_(shape.zeros_like()), v_(shape.zeros_like()), lr_(lr), b1_(b1),
        b2_(b2), eps_(eps) {}

  void step(TensorBag& params, const TensorBag& grads) {
    ++t_;
    double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
      const std::string& name = params.name(i);
      const Eigen::MatrixXd& g = grads.at(name);
      Eigen::MatrixXd& m = m_.at(name);
      Eigen::MatrixXd& v = v_.at(name);
      m = b1_ * m + (1.0 - b1_) * g;
      v = b2_ * v + (1.0 - b2_) * g.cwiseProduct(g);
      Eigen::MatrixXd mhat = m / bc1;
      Eigen::MatrixXd vhat = v / bc2;
      params.tensor(i) -=
          lr_ * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
    }
  }

  int64_t step_count() const { return t_; }

 private:
  TensorBag m_, v_;
  int64_t t_ = 0;
  double lr_ = 1e-3, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
};

struct ModelParams {
  EncoderWeights encoder;
  PolicyParams policy;
};

struct EpochMetrics {
  int epoch = 0;
  double l_ce = 0.0;
  double l_path = 0.0;
  double l_se = 0.0;
  double mean_terminal_reward = 0.0;
  double mean_midpoint_reward = 0.0;
};

inline void write_metrics_csv(const std::string& path,
                              const std::vector<EpochMetrics>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics csv: " + path);
  out << "epoch,L_ce,L_path,L_se,mean_terminal_reward,mean_midpoint_reward\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.l_ce << ',' << r.l_path << ',' << r.l_se << ','
        << r.mean_terminal_reward << ',' << r.mean_midpoint_reward << '\n';
  }
}

class Trainer {
 public:
  Trainer(const KnowledgeGraph& graph, const EmbeddingTable& table,
          const ProductVocab& vocab, ModelParams params, TrainConfig cfg)
      : graph_(graph), table_(table), vocab_(vocab), params_(std::move(params)),
        cfg_(cfg) {
    cfg_.validate();
    enc_opt_ = Adam(params_.encoder.params, cfg_.lr);
    pol_opt_ = Adam(params_.policy.params, cfg_.lr);
  }

  const ModelParams& params() const { return params_; }
  ModelParams& params() { return params_; }
  int epoch() const { return epoch_; }
  const std::vector<EpochMetrics>& history() const { return history_; }

  EpochMetrics train_epoch(const std::vector<TrainInstance>& instances) {
    if (instances.empty()) throw std::invalid_argument("no training instances");
    RewardConfig rcfg{cfg_.T, cfg_.reward_eps};

    std::vector<size_t> order(instances.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng epoch_rng = Rng::derive(cfg_.seed, 0xE50C000000000000ull |
                                               static_cast<uint64_t>(epoch_));
    epoch_rng.shuffle(order);

    EpochMetrics m;
    m.epoch = epoch_ + 1;
    double walks = 0.0, midsteps = 0.0;

    TensorBag enc_grads = params_.encoder.params.zeros_like();
    TensorBag pol_grads = params_.policy.params.zeros_like();
    size_t in_batch = 0;
    auto flush = [&]() {
      if (in_batch == 0) return;
      double inv = 1.0 / static_cast<double>(in_batch);
      for (size_t i = 0; i < enc_grads.size(); ++i) enc_grads.tensor(i) *= inv;
      for (size_t i = 0; i < pol_grads.size(); ++i) pol_grads.tensor(i) *= inv;
      enc_opt_.step(params_.encoder.params, enc_grads);
      pol_opt_.step(params_.policy.params, pol_grads);
      enc_grads.set_zero();
      pol_grads.set_zero();
      in_batch = 0;
    };

    for (size_t pos = 0; pos < order.size(); ++pos) {
      size_t idx = order[pos];
      const TrainInstance& inst = instances[idx];
      Rng rng = Rng::derive(cfg_.seed,
                            (static_cast<uint64_t>(epoch_ + 1) << 32) |
                                static_cast<uint64_t>(idx));

      EncoderCache cache;
      EncoderState enc = encode(params_.encoder, vocab_, inst.prefix, &cache);
      int32_t target_row = vocab_.row_of(inst.t_list.front());
      double l_ce = ce_loss(enc.item_scores, target_row);

      SessionDecision dec;
      EntityId item_long;
      if (cfg_.use_session_agent) {
        dec.ev = session_policy(params_.policy, enc.s_se, inst.prefix, table_);
        dec.action = sample_index(dec.ev.probs, rng);
        dec.log_prob =
            std::log(dec.ev.probs(static_cast<Eigen::Index>(dec.action)));
        item_long = inst.prefix[static_cast<size_t>(dec.action)];
      } else {
        item_long = inst.prefix.back();
      }
      EntityId item_short = inst.prefix.back();

      Episode long_ep = rollout(Episode::StartKind::long_walk, item_long,
                                enc.s_se, inst.t_list, rcfg, rng);
      Episode short_ep = rollout(Episode::StartKind::short_walk, item_short,
                                 enc.s_se, inst.t_list, rcfg, rng);

      double l_path = path_loss(long_ep, params_.policy, cfg_.gamma) +
                      path_loss(short_ep, params_.policy, cfg_.gamma);
      double g_last = returns(long_ep.rewards(), cfg_.gamma).back();
      double l_se = cfg_.use_session_agent
                        ? session_loss(dec, g_last, params_.policy)
                        : 0.0;

      if (!std::isfinite(l_ce) || !std::isfinite(l_path) ||
          !std::isfinite(l_se)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << (epoch_ + 1) << " instance "
            << idx << ": L_ce=" << l_ce << " L_path=" << l_path
            << " L_se=" << l_se;
        throw std::runtime_error(msg.str());
      }

      encoder_backward(params_.encoder, cache,
                       ce_dlogits(enc.item_scores, target_row), enc_grads);
      if (cfg_.alpha > 0.0) {
        path_loss_add_grads(long_ep, params_.policy, cfg_.gamma, cfg_.alpha,
                            pol_grads);
        path_loss_add_grads(short_ep, params_.policy, cfg_.gamma, cfg_.alpha,
                            pol_grads);
      }
      if (cfg_.use_session_agent && cfg_.beta > 0.0) {
        session_loss_add_grads(dec, g_last, params_.policy, cfg_.beta,
                               pol_grads);
      }

      m.l_ce += l_ce;
      m.l_path += l_path;
      m.l_se += l_se;
      for (const Episode* ep : {&long_ep, &short_ep}) {
        m.mean_terminal_reward += ep->steps.back().reward;
        m.mean_midpoint_reward += ep->steps.front().reward;
        walks += 1.0;
        midsteps += 1.0;
      }

      if (++in_batch == static_cast<size_t>(cfg_.batch_size)) flush();
    }
    flush();

    double n = static_cast<double>(instances.size());
    m.l_ce /= n;
    m.l_path /= n;
    m.l_se /= n;
    m.mean_terminal_reward /= walks;
    m.mean_midpoint_reward /= midsteps;
    ++epoch_;
    history_.push_back(m);
    return m;
  }

  // Roll a 2-step walk from `start` with train-mode action spaces.
  Episode rollout(Episode::StartKind kind, const EntityId& start,
                  const Eigen::VectorXd& s_se,
                  const std::vector<EntityId>& t_list, const RewardConfig& rcfg,
                  Rng& rng) {
    Episode ep;
    ep.start_kind = kind;
    ep.start = start;
    Eigen::VectorXd s_start = table_.lookup(start);
    EntityId cur = start;
    for (int t = 0; t < 2; ++t) {
      ActionSpace as =
          build_action_space(graph_, cur, table_, cfg_.a_max, true,
                             cfg_.action_dropout, &rng);
      PathState st{s_se, s_start, table_.lookup(cur), t};
      EpisodeStep step;
      step.ev = path_policy(params_.policy, st, as, table_);
      step.action = sample_index(step.ev.probs, rng);
      step.log_prob =
          std::log(step.ev.probs(static_cast<Eigen::Index>(step.action)));
      const Action& taken = as.actions[static_cast<size_t>(step.action)];
      if (t == 0) {
        step.reward = cfg_.use_midpoint_reward
                          ? path_midpoint_reward(taken, start, t_list, midx_,
                                                 graph_, rcfg)
                          : 0.0;
      } else {
        step.reward = multi_target_reward(taken.entity, t_list, table_, rcfg);
      }
      cur = taken.entity;
      ep.steps.push_back(std::move(step));
    }
    ep.terminal = cur;
    return ep;
  }

  static int sample_index(const Eigen::VectorXd& probs, Rng& rng) {
    double u = rng.next_double();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      acc += probs(i);
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size() - 1);
  }

 private:
  const KnowledgeGraph& graph_;
  const EmbeddingTable& table_;
  const ProductVocab& vocab_;
  ModelParams params_;
  TrainConfig cfg_;
  Adam enc_opt_, pol_opt_;
  MidpointIndex midx_;
  int epoch_ = 0;
  std::vector<EpochMetrics> history_;
};

}  // namespace pathrec
