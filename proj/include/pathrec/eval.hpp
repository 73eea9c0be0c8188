#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathrec/corpus.hpp"
#include "pathrec/inference.hpp"

namespace pathrec {

inline int hit_rate(std::optional<int> rank, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  return rank.has_value() && *rank <= k ? 1 : 0;
}

// Single relevant item, so ideal DCG is 1 and NDCG reduces to the
// position discount alone.
inline double ndcg(std::optional<int> rank, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!rank.has_value() || *rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(*rank) + 1.0);
}

struct MetricReport {
  std::map<int, double> hr;
  std::map<int, double> ndcg;
  size_t n_instances = 0;
};

inline MetricReport aggregate_ranks(const std::vector<std::optional<int>>& ranks,
                                    const std::vector<int>& ks) {
  if (ranks.empty()) throw std::invalid_argument("no instances to evaluate");
  MetricReport rep;
  rep.n_instances = ranks.size();
  for (int k : ks) {
    double h = 0.0, n = 0.0;
    for (const auto& r : ranks) {
      h += hit_rate(r, k);
      n += ndcg(r, k);
    }
    rep.hr[k] = h / static_cast<double>(ranks.size());
    rep.ndcg[k] = n / static_cast<double>(ranks.size());
  }
  return rep;
}

// Rank of t_list[0] within the top-max(ks) recommendation list per instance.
inline MetricReport evaluate(const EncoderWeights& encoder,
                             const PolicyParams& policy,
                             const ProductVocab& vocab,
                             const KnowledgeGraph& graph,
                             const EmbeddingTable& table,
                             const std::vector<TrainInstance>& instances,
                             const std::vector<int>& ks,
                             InferenceConfig icfg) {
  if (instances.empty()) throw std::invalid_argument("empty test set");
  if (ks.empty()) throw std::invalid_argument("no cutoffs requested");
  int max_k = 0;
  for (int k : ks) max_k = std::max(max_k, k);
  icfg.K = max_k;

  std::vector<std::optional<int>> ranks;
  ranks.reserve(instances.size());
  for (const TrainInstance& inst : instances) {
    auto recs = recommend(encoder, policy, vocab, graph, table, inst.prefix, icfg);
    std::optional<int> rank;
    for (size_t i = 0; i < recs.size(); ++i) {
      if (recs[i].item.index == inst.t_list.front().index) {
        rank = static_cast<int>(i) + 1;
        break;
      }
    }
    ranks.push_back(rank);
  }
  return aggregate_ranks(ranks, ks);
}

// One component toggle per variant, mirroring the ablation grid.
struct AblationVariant {
  std::string name;
  bool use_image = true;
  bool use_merge = true;
  bool use_session_agent = true;
  bool use_midpoint = true;
  int T;

  explicit AblationVariant(std::string n, int t) : name(std::move(n)), T(t) {}
};

inline std::vector<AblationVariant> ablation_variants(int default_T) {
  std::vector<AblationVariant> v;
  v.emplace_back("full", default_T);
  v.emplace_back("no_image_features", default_T);
  v.back().use_image = false;
  v.emplace_back("no_edge_merge", default_T);
  v.back().use_merge = false;
  v.emplace_back("no_session_agent", default_T);
  v.back().use_session_agent = false;
  v.emplace_back("no_midpoint_reward", default_T);
  v.back().use_midpoint = false;
  v.emplace_back("single_target", 1);
  return v;
}

struct AblationRow {
  std::string variant;
  int k = 0;
  double hr = 0.0;
  double ndcg = 0.0;
  size_t n = 0;
  uint64_t seed = 0;
};

inline void write_ablation_csv(const std::string& path,
                               const std::vector<AblationRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write ablation csv: " + path);
  out << "variant,k,hr,ndcg,n,seed\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.variant << ',' << r.k << ',' << r.hr << ',' << r.ndcg << ','
        << r.n << ',' << r.seed << '\n';
  }
}

}  // namespace pathrec
