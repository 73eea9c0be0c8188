#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pathrec/pipeline.hpp"

namespace {

pathrec::Config resolve_config(const std::string& path,
                               const std::vector<std::string>& sets) {
  pathrec::Config cfg = pathrec::load_config(path);
  pathrec::apply_overrides(cfg, sets);
  if (cfg.workdir.empty()) {
    const char* env = std::getenv("PATHREC_WORKDIR");
    if (env && *env) cfg.workdir = env;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Session recommender over a typed product graph: builds the graph, "
      "pretrains translational embeddings, trains the two-level walk policy, "
      "and serves evaluated top-K lists with path explanations."};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  size_t instance_index = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "config file (key = value lines)")
        ->required();
    sub->add_option("--set", sets, "override a config key (key=value)");
    return sub;
  };

  CLI::App* c_build = add_common(
      app.add_subcommand("build-kg", "ingest corpora and write the graph"));
  CLI::App* c_pre = add_common(
      app.add_subcommand("pretrain", "train entity/relation embeddings"));
  CLI::App* c_train =
      add_common(app.add_subcommand("train", "train encoder and walk policies"));
  CLI::App* c_eval = add_common(
      app.add_subcommand("evaluate", "rank held-out targets, report HR/NDCG"));
  CLI::App* c_rec = add_common(app.add_subcommand(
      "recommend", "emit JSON-lines top-K lists for the test split"));
  CLI::App* c_exp = add_common(app.add_subcommand(
      "explain", "pretty-print one instance's recommendations with paths"));
  c_exp->add_option("--instance", instance_index, "test instance index");
  CLI::App* c_abl = add_common(
      app.add_subcommand("ablate", "run the component-toggle grid"));

  CLI11_PARSE(app, argc, argv);

  try {
    pathrec::Config cfg = resolve_config(config_path, sets);
    if (c_build->parsed()) {
      pathrec::pipeline::cmd_build_kg(cfg);
      pathrec::KnowledgeGraph g =
          pathrec::load_graph(pathrec::pipeline::kg_dir(cfg.workdir));
      std::cout << "graph: " << g.entity_count() << " entities, "
                << g.forward_triples().size() << " triples -> "
                << pathrec::pipeline::kg_dir(cfg.workdir) << "\n";
    } else if (c_pre->parsed()) {
      pathrec::EmbeddingTable t = pathrec::pipeline::cmd_pretrain(cfg);
      std::cout << "embeddings: " << t.entity_vecs.rows() << " entities x "
                << t.d << " dims -> "
                << pathrec::pipeline::embeddings_path(cfg.workdir) << "\n";
    } else if (c_train->parsed()) {
      auto out = pathrec::pipeline::cmd_train(cfg);
      if (!out.history.empty()) {
        const auto& m = out.history.back();
        std::cout << "epoch " << m.epoch << ": L_ce=" << m.l_ce
                  << " L_path=" << m.l_path << " L_se=" << m.l_se
                  << " mean_terminal_reward=" << m.mean_terminal_reward << "\n";
      }
      std::cout << "checkpoint -> "
                << pathrec::pipeline::checkpoint_dir(cfg.workdir) << "\n";
    } else if (c_eval->parsed()) {
      pathrec::MetricReport rep = pathrec::pipeline::cmd_evaluate(cfg);
      for (const auto& [k, hr] : rep.hr) {
        std::cout << "HR@" << k << "=" << hr << " NDCG@" << k << "="
                  << rep.ndcg.at(k) << "\n";
      }
      std::cout << "n=" << rep.n_instances << " -> "
                << pathrec::pipeline::eval_path(cfg.workdir) << "\n";
    } else if (c_rec->parsed()) {
      pathrec::pipeline::cmd_recommend(cfg, std::cout);
    } else if (c_exp->parsed()) {
      pathrec::pipeline::cmd_explain(cfg, std::cout, instance_index);
    } else if (c_abl->parsed()) {
      auto rows = pathrec::pipeline::cmd_ablate(cfg);
      std::cout << "ablation grid (" << rows.size() << " rows) -> "
                << pathrec::pipeline::ablation_path(cfg.workdir) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
