#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathrec/embedding.hpp"
#include "pathrec/graph.hpp"
#include "pathrec/policy.hpp"
#include "pathrec/session_encoder.hpp"

namespace pathrec {

struct ReasonPath {
  EntityId start;
  std::array<Action, 2> hops;
  double log_prob = 0.0;
  EntityId terminal;
};

struct Recommendation {
  enum class Origin { long_walk, short_walk, fallback };
  EntityId item;
  double score = 0.0;
  std::optional<ReasonPath> best_path;
  Origin origin = Origin::fallback;
};

inline std::string to_string(Recommendation::Origin o) {
  switch (o) {
    case Recommendation::Origin::long_walk: return "long";
    case Recommendation::Origin::short_walk: return "short";
    default: return "fallback";
  }
}

namespace detail {

// Indices of the top `width` probabilities; ties by (relation, entity).
inline std::vector<int> top_actions(const Eigen::VectorXd& probs,
                                    const ActionSpace& as, int width) {
  std::vector<int> idx(as.actions.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    double pa = probs(a), pb = probs(b);
    if (pa != pb) return pa > pb;
    const Action& aa = as.actions[static_cast<size_t>(a)];
    const Action& ab = as.actions[static_cast<size_t>(b)];
    if (aa.rel.directed_id() != ab.rel.directed_id()) {
      return aa.rel.directed_id() < ab.rel.directed_id();
    }
    return aa.entity.index < ab.entity.index;
  });
  if (static_cast<int>(idx.size()) > width) idx.resize(static_cast<size_t>(width));
  return idx;
}

}  // namespace detail

// Width-limited highest-probability expansion of all length-2 walks from
// `start`, eval-mode action spaces (no dropout). Emitted paths carry exact
// summed log-probabilities and are sorted by log_prob descending.
inline std::vector<ReasonPath> beam_search(const KnowledgeGraph& graph,
                                           const PolicyParams& policy,
                                           const EmbeddingTable& table,
                                           const Eigen::VectorXd& s_se,
                                           const EntityId& start,
                                           const std::array<int, 2>& widths,
                                           int a_max = 200) {
  if (widths[0] < 1 || widths[1] < 1) {
    throw std::invalid_argument("beam widths must be >= 1");
  }
  Eigen::VectorXd s_start = table.lookup(start);
  ActionSpace as0 = build_action_space(graph, start, table, a_max, false);
  PathState st0{s_se, s_start, s_start, 0};
  PolicyEval ev0 = path_policy(policy, st0, as0, table);

  std::vector<ReasonPath> out;
  for (int i : detail::top_actions(ev0.probs, as0, widths[0])) {
    const Action& first = as0.actions[static_cast<size_t>(i)];
    double lp0 = std::log(ev0.probs(i));
    ActionSpace as1 = build_action_space(graph, first.entity, table, a_max, false);
    PathState st1{s_se, s_start, table.lookup(first.entity), 1};
    PolicyEval ev1 = path_policy(policy, st1, as1, table);
    for (int j : detail::top_actions(ev1.probs, as1, widths[1])) {
      const Action& second = as1.actions[static_cast<size_t>(j)];
      ReasonPath p;
      p.start = start;
      p.hops = {first, second};
      p.log_prob = lp0 + std::log(ev1.probs(j));
      p.terminal = second.entity;
      out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end(), [](const ReasonPath& a, const ReasonPath& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    auto key = [](const ReasonPath& p) {
      return std::make_tuple(p.hops[0].rel.directed_id(), p.hops[0].entity.index,
                             p.hops[1].rel.directed_id(), p.hops[1].entity.index);
    };
    return key(a) < key(b);
  });
  return out;
}

struct InferenceConfig {
  std::array<int, 2> widths{100, 1};
  int a_max = 200;
  int K = 10;
  bool use_session_agent = true;
};

// Top-K list: path-backed items first (scored by best supporting path
// probability across both walks), then encoder-score fallback fill.
inline std::vector<Recommendation> recommend(
    const EncoderWeights& encoder, const PolicyParams& policy,
    const ProductVocab& vocab, const KnowledgeGraph& graph,
    const EmbeddingTable& table, const std::vector<EntityId>& prefix,
    const InferenceConfig& cfg) {
  if (cfg.K < 1) throw std::invalid_argument("K must be >= 1");
  if (prefix.empty()) throw std::invalid_argument("empty session prefix");

  EncoderState enc = encode(encoder, vocab, prefix);

  EntityId item_short = prefix.back();
  EntityId item_long = item_short;
  if (cfg.use_session_agent) {
    PolicyEval ev = session_policy(policy, enc.s_se, prefix, table);
    Eigen::Index best = 0;
    ev.probs.maxCoeff(&best);
    item_long = prefix[static_cast<size_t>(best)];
  }

  std::set<int32_t> exclude;
  for (const EntityId& e : prefix) exclude.insert(e.index);

  std::map<int32_t, Recommendation> best_by_item;
  auto absorb = [&](const std::vector<ReasonPath>& paths,
                    Recommendation::Origin origin) {
    for (const ReasonPath& p : paths) {
      if (!vocab.contains(p.terminal)) continue;
      if (exclude.count(p.terminal.index)) continue;
      double score = std::exp(p.log_prob);
      auto it = best_by_item.find(p.terminal.index);
      if (it == best_by_item.end() || score > it->second.score) {
        Recommendation r;
        r.item = p.terminal;
        r.score = score;
        r.best_path = p;
        r.origin = origin;
        best_by_item[p.terminal.index] = std::move(r);
      }
    }
  };
  if (cfg.use_session_agent) {
    absorb(beam_search(graph, policy, table, enc.s_se, item_long, cfg.widths,
                       cfg.a_max),
           Recommendation::Origin::long_walk);
  }
  absorb(beam_search(graph, policy, table, enc.s_se, item_short, cfg.widths,
                     cfg.a_max),
         Recommendation::Origin::short_walk);

  std::vector<Recommendation> out;
  out.reserve(best_by_item.size());
  for (auto& [idx, rec] : best_by_item) out.push_back(std::move(rec));
  std::sort(out.begin(), out.end(),
            [](const Recommendation& a, const Recommendation& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.item.index < b.item.index;
            });
  if (static_cast<int>(out.size()) > cfg.K) {
    out.resize(static_cast<size_t>(cfg.K));
  }

  if (static_cast<int>(out.size()) < cfg.K) {
    std::set<int32_t> taken = exclude;
    for (const auto& r : out) taken.insert(r.item.index);
    std::vector<int32_t> rows(static_cast<size_t>(vocab.size()));
    for (int32_t r = 0; r < vocab.size(); ++r) rows[static_cast<size_t>(r)] = r;
    std::sort(rows.begin(), rows.end(), [&](int32_t a, int32_t b) {
      double sa = enc.item_scores(a), sb = enc.item_scores(b);
      if (sa != sb) return sa > sb;
      return vocab.item_at(a).index < vocab.item_at(b).index;
    });
    for (int32_t row : rows) {
      if (static_cast<int>(out.size()) >= cfg.K) break;
      const EntityId& item = vocab.item_at(row);
      if (taken.count(item.index)) continue;
      Recommendation r;
      r.item = item;
      r.score = enc.item_scores(row);
      r.origin = Recommendation::Origin::fallback;
      out.push_back(std::move(r));
    }
  }
  return out;
}

// Arrow rendering with original edge directions restored: a forward hop is
// "A --rel--> B", an inverse hop "A <--rel-- B".
inline std::string render_explanation(const ReasonPath& path,
                                      const EntityRegistry& registry) {
  std::string out = registry.key_of(path.start.index);
  for (const Action& hop : path.hops) {
    std::string rel(to_string(hop.rel.name));
    if (hop.rel.inverse) {
      out += " <--" + rel + "-- " + registry.key_of(hop.entity.index);
    } else {
      out += " --" + rel + "--> " + registry.key_of(hop.entity.index);
    }
  }
  return out;
}

inline nlohmann::json explanation_json(const ReasonPath& path,
                                       const EntityRegistry& registry) {
  nlohmann::json hops = nlohmann::json::array();
  for (const Action& hop : path.hops) {
    hops.push_back({{"rel", std::string(to_string(hop.rel.name))},
                    {"dir", hop.rel.inverse ? "inverse" : "forward"},
                    {"entity", registry.key_of(hop.entity.index)}});
  }
  return {{"start", registry.key_of(path.start.index)},
          {"hops", hops},
          {"terminal", registry.key_of(path.terminal.index)},
          {"log_prob", path.log_prob}};
}

}  // namespace pathrec
