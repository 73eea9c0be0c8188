#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathrec/config.hpp"
#include "pathrec/corpus.hpp"
#include "pathrec/embedding.hpp"
#include "pathrec/eval.hpp"
#include "pathrec/graph.hpp"
#include "pathrec/inference.hpp"
#include "pathrec/session_encoder.hpp"
#include "pathrec/trainer.hpp"

namespace pathrec::pipeline {

inline std::string kg_dir(const std::string& w) { return w + "/kg"; }
inline std::string sessions_path(const std::string& w) { return w + "/sessions.jsonl"; }
inline std::string embeddings_path(const std::string& w) { return w + "/embeddings.bin"; }
inline std::string embeddings_index_path(const std::string& w) {
  return w + "/embeddings_index.tsv";
}
inline std::string checkpoint_dir(const std::string& w) { return w + "/checkpoint"; }
inline std::string metrics_path(const std::string& w) { return w + "/metrics.csv"; }
inline std::string eval_path(const std::string& w) { return w + "/eval.json"; }
inline std::string recommendations_path(const std::string& w) {
  return w + "/recommendations.jsonl";
}
inline std::string ablation_path(const std::string& w) { return w + "/ablation.csv"; }
inline std::string manifest_path(const std::string& w, const std::string& cmd) {
  return w + "/manifest." + cmd + ".json";
}

inline void require_file(const std::string& path, const std::string& hint) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("missing " + hint + ": " + path +
                             " (run the upstream command first)");
  }
}

inline void require_workdir(const Config& cfg) {
  if (cfg.workdir.empty()) {
    throw std::runtime_error(
        "no workdir configured (set data.workdir or PATHREC_WORKDIR)");
  }
}

// --- knowledge-graph construction ----------------------------------------

struct KgBundle {
  KnowledgeGraph graph;
  MergeStats merge_stats;
  SessionReport report;
  std::vector<Session> train, valid, test;
};

inline KgBundle build_kg_bundle(const Config& cfg, bool use_image = true,
                                bool use_merge = true) {
  require_file(cfg.interactions, "interactions file");
  require_file(cfg.metadata, "metadata file");

  EntityRegistry registry;
  std::vector<Triple> triples = ingest_metadata(cfg.metadata, registry);
  if (use_image && !cfg.image_labels.empty()) {
    require_file(cfg.image_labels, "image label file");
    auto img = ingest_image_features(cfg.image_labels, registry);
    triples.insert(triples.end(), img.begin(), img.end());
  }

  auto events = load_interactions(cfg.interactions);
  KgBundle b;
  auto sessions = build_sessions(events, cfg.min_item_count, registry, &b.report);
  auto split = split_corpus(sessions, cfg.seed);

  std::set<int32_t> domain;
  for (const EntityId& e : registry.all_of_kind(EntityKind::product)) {
    domain.insert(e.index);
  }
  for (const EntityId& e : registry.all_of_kind(EntityKind::movie)) {
    domain.insert(e.index);
  }
  triples = split_relations(triples, domain);
  if (use_merge) triples = merge_duplicate_edges(triples, &b.merge_stats);

  auto co = add_cooccur(split.train);
  triples.insert(triples.end(), co.begin(), co.end());
  auto pu = purchase_triples(split.train);
  triples.insert(triples.end(), pu.begin(), pu.end());

  b.graph = KnowledgeGraph::finalize(std::move(registry), triples);
  b.train = std::move(split.train);
  b.valid = std::move(split.valid);
  b.test = std::move(split.test);
  return b;
}

inline void cmd_build_kg(const Config& cfg) {
  cfg.validate();
  require_workdir(cfg);
  KgBundle b = build_kg_bundle(cfg);
  std::filesystem::create_directories(kg_dir(cfg.workdir));
  save_graph(b.graph, kg_dir(cfg.workdir), &b.merge_stats);

  std::string sp = sessions_path(cfg.workdir);
  std::filesystem::remove(sp);
  write_sessions_jsonl(sp, b.train, b.graph.registry(), "train");
  write_sessions_jsonl(sp, b.valid, b.graph.registry(), "valid");
  write_sessions_jsonl(sp, b.test, b.graph.registry(), "test");

  write_manifest(manifest_path(cfg.workdir, "build-kg"), "build-kg", cfg,
                 {"kg/entities.tsv", "kg/triples.tsv", "kg/stats.json",
                  "sessions.jsonl"});
}

// --- embedding pretraining ----------------------------------------------

inline EmbeddingTable cmd_pretrain(const Config& cfg) {
  cfg.validate();
  require_workdir(cfg);
  require_file(kg_dir(cfg.workdir) + "/triples.tsv", "knowledge graph");
  KnowledgeGraph graph = load_graph(kg_dir(cfg.workdir));
  PretrainConfig pcfg;
  pcfg.d = cfg.d;
  pcfg.epochs = cfg.pretrain_epochs;
  pcfg.lr = cfg.pretrain_lr;
  pcfg.margin = cfg.pretrain_margin;
  pcfg.seed = cfg.seed;
  EmbeddingTable table = pretrain(graph, pcfg);
  save_embeddings(table, embeddings_path(cfg.workdir), graph.registry(),
                  embeddings_index_path(cfg.workdir));
  write_manifest(manifest_path(cfg.workdir, "pretrain"), "pretrain", cfg,
                 {"embeddings.bin", "embeddings_index.tsv"});
  return table;
}

// --- training -------------------------------------------------------------

struct LoadedWorkdir {
  KnowledgeGraph graph;
  EmbeddingTable table;
  ProductVocab vocab;
  std::vector<Session> train, valid, test;
};

inline LoadedWorkdir load_workdir(const Config& cfg) {
  require_workdir(cfg);
  require_file(kg_dir(cfg.workdir) + "/triples.tsv", "knowledge graph");
  require_file(embeddings_path(cfg.workdir), "embeddings file");
  require_file(sessions_path(cfg.workdir), "sessions file");
  LoadedWorkdir w;
  w.graph = load_graph(kg_dir(cfg.workdir));
  w.table = load_embeddings(embeddings_path(cfg.workdir));
  w.vocab = ProductVocab::from_graph(w.graph);
  auto by_split = read_sessions_jsonl(sessions_path(cfg.workdir), w.graph.registry());
  w.train = std::move(by_split["train"]);
  w.valid = std::move(by_split["valid"]);
  w.test = std::move(by_split["test"]);
  return w;
}

inline TrainConfig train_config_from(const Config& cfg) {
  TrainConfig t;
  t.lr = cfg.lr;
  t.alpha = cfg.alpha;
  t.beta = cfg.beta;
  t.gamma = cfg.gamma;
  t.epochs = cfg.epochs;
  t.batch_size = cfg.batch;
  t.seed = cfg.seed;
  t.T = cfg.T;
  t.a_max = cfg.a_max;
  t.action_dropout = cfg.dropout;
  return t;
}

inline ModelParams init_model(const Config& cfg, const ProductVocab& vocab) {
  Rng enc_rng = Rng::derive(cfg.seed, 1);
  Rng pol_rng = Rng::derive(cfg.seed, 2);
  ModelParams m;
  m.encoder = EncoderWeights::init(encoder_kind_from_string(cfg.encoder),
                                   vocab.size(), cfg.d_se, enc_rng);
  m.policy = PolicyParams::init(PolicyDims{cfg.d, cfg.d_se, cfg.d_proj}, pol_rng);
  return m;
}

inline void save_checkpoint(const std::string& dir, const ModelParams& model,
                            int epoch, const Config& cfg) {
  std::filesystem::create_directories(dir);
  save_tensors(model.encoder.params, dir + "/encoder.tensors");
  save_tensors(model.policy.params, dir + "/policy.tensors");
  nlohmann::json meta;
  meta["epoch"] = epoch;
  meta["encoder_kind"] = to_string(model.encoder.kind);
  meta["d"] = model.policy.dims.d;
  meta["d_se"] = model.policy.dims.d_se;
  meta["d_proj"] = model.policy.dims.d_proj;
  meta["vocab"] = model.encoder.vocab_size();
  meta["config_hash"] = cfg.hash();
  std::ofstream out(dir + "/meta.json");
  if (!out) throw std::runtime_error("cannot write checkpoint meta");
  out << meta.dump(2) << '\n';
}

inline ModelParams load_checkpoint(const std::string& dir, int* epoch_out = nullptr) {
  require_file(dir + "/meta.json", "checkpoint");
  std::ifstream in(dir + "/meta.json");
  nlohmann::json meta = nlohmann::json::parse(in);
  ModelParams m;
  m.encoder.kind = encoder_kind_from_string(meta.at("encoder_kind").get<std::string>());
  m.encoder.d_se = meta.at("d_se").get<int>();
  m.encoder.params = load_tensors(dir + "/encoder.tensors");
  m.policy.dims.d = meta.at("d").get<int>();
  m.policy.dims.d_se = meta.at("d_se").get<int>();
  m.policy.dims.d_proj = meta.at("d_proj").get<int>();
  m.policy.params = load_tensors(dir + "/policy.tensors");
  if (epoch_out) *epoch_out = meta.at("epoch").get<int>();
  return m;
}

struct TrainOutcome {
  ModelParams model;
  std::vector<EpochMetrics> history;
};

// In-memory training loop shared by the train command and the ablation
// harness. Toggles mirror the ablation grid.
inline TrainOutcome train_in_memory(const LoadedWorkdir& w, const Config& cfg,
                                    bool use_session_agent = true,
                                    bool use_midpoint = true) {
  TrainConfig tcfg = train_config_from(cfg);
  tcfg.use_session_agent = use_session_agent;
  tcfg.use_midpoint_reward = use_midpoint;
  auto instances = make_instances(w.train, cfg.T);
  Trainer trainer(w.graph, w.table, w.vocab, init_model(cfg, w.vocab), tcfg);
  for (int e = 0; e < cfg.epochs; ++e) trainer.train_epoch(instances);
  return {trainer.params(), trainer.history()};
}

inline TrainOutcome cmd_train(const Config& cfg) {
  cfg.validate();
  LoadedWorkdir w = load_workdir(cfg);
  TrainOutcome out = train_in_memory(w, cfg);
  write_metrics_csv(metrics_path(cfg.workdir), out.history);
  save_checkpoint(checkpoint_dir(cfg.workdir), out.model, cfg.epochs, cfg);
  write_manifest(manifest_path(cfg.workdir, "train"), "train", cfg,
                 {"checkpoint/encoder.tensors", "checkpoint/policy.tensors",
                  "checkpoint/meta.json", "metrics.csv"});
  return out;
}

// --- evaluation -----------------------------------------------------------

inline InferenceConfig inference_config_from(const Config& cfg,
                                             bool use_session_agent = true) {
  InferenceConfig icfg;
  icfg.widths = {cfg.width0, cfg.width1};
  icfg.a_max = cfg.a_max;
  icfg.K = cfg.K;
  icfg.use_session_agent = use_session_agent;
  return icfg;
}

inline MetricReport evaluate_in_memory(const LoadedWorkdir& w,
                                       const ModelParams& model,
                                       const Config& cfg,
                                       bool use_session_agent = true) {
  auto instances = make_instances(w.test, cfg.T);
  return evaluate(model.encoder, model.policy, w.vocab, w.graph, w.table,
                  instances, {5, 10, 20},
                  inference_config_from(cfg, use_session_agent));
}

inline MetricReport cmd_evaluate(const Config& cfg) {
  cfg.validate();
  LoadedWorkdir w = load_workdir(cfg);
  ModelParams model = load_checkpoint(checkpoint_dir(cfg.workdir));
  MetricReport rep = evaluate_in_memory(w, model, cfg);

  nlohmann::json j;
  j["n"] = rep.n_instances;
  j["seed"] = cfg.seed;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [k, hr] : rep.hr) {
    rows.push_back({{"k", k}, {"hr", hr}, {"ndcg", rep.ndcg.at(k)}});
  }
  j["metrics"] = rows;
  std::ofstream out(eval_path(cfg.workdir));
  if (!out) throw std::runtime_error("cannot write eval report");
  out << j.dump(2) << '\n';
  write_manifest(manifest_path(cfg.workdir, "evaluate"), "evaluate", cfg,
                 {"eval.json"});
  return rep;
}

// --- recommendation / explanation ----------------------------------------

inline nlohmann::json recommendation_json(const Recommendation& r,
                                          const EntityRegistry& registry) {
  nlohmann::json j;
  j["item"] = registry.key_of(r.item.index);
  j["score"] = r.score;
  j["origin"] = to_string(r.origin);
  if (r.best_path) j["path"] = explanation_json(*r.best_path, registry);
  return j;
}

inline void cmd_recommend(const Config& cfg, std::ostream& echo) {
  cfg.validate();
  LoadedWorkdir w = load_workdir(cfg);
  ModelParams model = load_checkpoint(checkpoint_dir(cfg.workdir));
  auto instances = make_instances(w.test, cfg.T);
  InferenceConfig icfg = inference_config_from(cfg);

  std::ofstream out(recommendations_path(cfg.workdir));
  if (!out) throw std::runtime_error("cannot write recommendations");
  for (const auto& inst : instances) {
    auto recs = recommend(model.encoder, model.policy, w.vocab, w.graph,
                          w.table, inst.prefix, icfg);
    nlohmann::json j;
    nlohmann::json prefix = nlohmann::json::array();
    for (const auto& e : inst.prefix) {
      prefix.push_back(w.graph.registry().key_of(e.index));
    }
    j["prefix"] = prefix;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : recs) {
      rows.push_back(recommendation_json(r, w.graph.registry()));
    }
    j["recommendations"] = rows;
    std::string line = j.dump();
    out << line << '\n';
    echo << line << '\n';
  }
  write_manifest(manifest_path(cfg.workdir, "recommend"), "recommend", cfg,
                 {"recommendations.jsonl"});
}

inline void cmd_explain(const Config& cfg, std::ostream& out,
                        size_t instance_index) {
  cfg.validate();
  LoadedWorkdir w = load_workdir(cfg);
  ModelParams model = load_checkpoint(checkpoint_dir(cfg.workdir));
  auto instances = make_instances(w.test, cfg.T);
  if (instances.empty()) throw std::runtime_error("no test instances");
  if (instance_index >= instances.size()) {
    throw std::runtime_error("instance index out of range (have " +
                             std::to_string(instances.size()) + ")");
  }
  const auto& inst = instances[instance_index];
  const auto& registry = w.graph.registry();
  out << "session:";
  for (const auto& e : inst.prefix) out << ' ' << registry.key_of(e.index);
  out << "\n";
  auto recs = recommend(model.encoder, model.policy, w.vocab, w.graph, w.table,
                        inst.prefix, inference_config_from(cfg));
  int rank = 0;
  for (const auto& r : recs) {
    out << ++rank << ". " << registry.key_of(r.item.index) << "  ["
        << to_string(r.origin) << ", score " << r.score << "]\n";
    if (r.best_path) {
      out << "   " << render_explanation(*r.best_path, registry) << "\n";
    }
  }
}

// --- ablation -------------------------------------------------------------

inline std::vector<AblationRow> cmd_ablate(const Config& cfg) {
  cfg.validate();
  require_workdir(cfg);
  std::filesystem::create_directories(cfg.workdir);
  std::vector<AblationRow> rows;
  for (const AblationVariant& v : ablation_variants(cfg.T)) {
    Config vcfg = cfg;
    vcfg.T = v.T;
    KgBundle b = build_kg_bundle(vcfg, v.use_image, v.use_merge);
    PretrainConfig pcfg;
    pcfg.d = vcfg.d;
    pcfg.epochs = vcfg.pretrain_epochs;
    pcfg.lr = vcfg.pretrain_lr;
    pcfg.margin = vcfg.pretrain_margin;
    pcfg.seed = vcfg.seed;
    LoadedWorkdir w;
    w.table = pretrain(b.graph, pcfg);
    w.graph = std::move(b.graph);
    w.vocab = ProductVocab::from_graph(w.graph);
    w.train = std::move(b.train);
    w.test = std::move(b.test);
    TrainOutcome out =
        train_in_memory(w, vcfg, v.use_session_agent, v.use_midpoint);
    MetricReport rep =
        evaluate_in_memory(w, out.model, vcfg, v.use_session_agent);
    for (const auto& [k, hr] : rep.hr) {
      rows.push_back({v.name, k, hr, rep.ndcg.at(k), rep.n_instances, vcfg.seed});
    }
  }
  write_ablation_csv(ablation_path(cfg.workdir), rows);
  write_manifest(manifest_path(cfg.workdir, "ablate"), "ablate", cfg,
                 {"ablation.csv"});
  return rows;
}

}  // namespace pathrec::pipeline
