#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pathrec/embedding.hpp"
#include "pathrec/graph.hpp"
#include "pathrec/mathutil.hpp"
#include "pathrec/policy.hpp"

namespace pathrec {

struct RewardConfig {
  int T = 5;
  double eps = 1e-8;

  void validate() const {
    if (T < 1) throw std::invalid_argument("reward targets T must be >= 1");
    if (!(eps > 0.0 && eps < 1.0)) {
      throw std::invalid_argument("reward eps must lie in (0, 1)");
    }
  }
};

// Terminal reward: T - index on hit; log-sigmoid similarity to the first
// target on miss, clamped below at ln(eps).
inline double multi_target_reward(const EntityId& v_end,
                                  const std::vector<EntityId>& t_list,
                                  const EmbeddingTable& table,
                                  const RewardConfig& cfg) {
  cfg.validate();
  if (t_list.empty()) throw std::invalid_argument("empty target list");
  size_t horizon = std::min<size_t>(t_list.size(), static_cast<size_t>(cfg.T));
  for (size_t i = 0; i < horizon; ++i) {
    if (t_list[i].index == v_end.index) {
      return static_cast<double>(cfg.T) - static_cast<double>(i);
    }
  }
  double dot = table.lookup(v_end).dot(table.lookup(t_list[0]));
  return std::max(log_sigmoid(dot), std::log(cfg.eps));
}

// Midpoints of length-2 start->goal walks, memoized per (start, goal).
// An entry (r, m) means the edge start -r-> m exists and some edge m -> goal
// exists (inverse edges count on both hops).
class MidpointIndex {
 public:
  using Entry = std::set<std::pair<int, int32_t>>;  // (rel directed id, entity)

  const Entry& lookup(const KnowledgeGraph& graph, const EntityId& start,
                      const EntityId& goal) {
    std::pair<int32_t, int32_t> key{start.index, goal.index};
    {
      std::shared_lock rd(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    Entry fresh = compute(graph, start.index, goal.index);
    std::unique_lock wr(mu_);
    return cache_.emplace(key, std::move(fresh)).first->second;
  }

  bool contains(const KnowledgeGraph& graph, const Action& action,
                const EntityId& start, const EntityId& goal) {
    const Entry& e = lookup(graph, start, goal);
    return e.count({action.rel.directed_id(), action.entity.index}) > 0;
  }

  static Entry compute(const KnowledgeGraph& graph, int32_t start,
                       int32_t goal) {
    Entry out;
    for (const auto& e : graph.neighbors(start)) {
      if (graph.connected(e.tail, goal)) {
        out.insert({e.rel.directed_id(), e.tail});
      }
    }
    return out;
  }

 private:
  std::map<std::pair<int32_t, int32_t>, Entry> cache_;
  std::shared_mutex mu_;
};

// Eager cross-product build, used by tests and the debug dump.
inline std::map<std::pair<int32_t, int32_t>, MidpointIndex::Entry>
build_midpoint_index(const KnowledgeGraph& graph,
                     const std::vector<EntityId>& starts,
                     const std::vector<EntityId>& goals) {
  std::map<std::pair<int32_t, int32_t>, MidpointIndex::Entry> out;
  for (const EntityId& s : starts) {
    for (const EntityId& g : goals) {
      out[{s.index, g.index}] = MidpointIndex::compute(graph, s.index, g.index);
    }
  }
  return out;
}

// Shaping reward for the intermediate hop: the largest T - i over targets
// whose start->target midpoint set contains the taken action; 0 otherwise.
inline double path_midpoint_reward(const Action& action, const EntityId& start,
                                   const std::vector<EntityId>& t_list,
                                   MidpointIndex& index,
                                   const KnowledgeGraph& graph,
                                   const RewardConfig& cfg) {
  cfg.validate();
  double best = 0.0;
  size_t horizon = std::min<size_t>(t_list.size(), static_cast<size_t>(cfg.T));
  for (size_t i = 0; i < horizon; ++i) {
    if (index.contains(graph, action, start, t_list[i])) {
      best = std::max(best, static_cast<double>(cfg.T) - static_cast<double>(i));
    }
  }
  return best;
}

}  // namespace pathrec
