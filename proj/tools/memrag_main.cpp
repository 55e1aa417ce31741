#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "memrag/harness.hpp"
#include "memrag/util.hpp"

namespace {

using namespace memrag;

RunConfig resolve_config(const std::string& config_path, const std::string& out_dir,
                         std::int64_t seed) {
  RunConfig config =
      config_path.empty() ? default_run_config() : load_run_config(config_path);
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (seed >= 0) {
    config.seed = static_cast<std::uint64_t>(seed);
    config.train_corpus.seed = config.seed;
    config.test_corpus.seed = splitmix64(config.seed ^ 0x7e57ULL);
  }
  return config;
}

void write_report(const std::filesystem::path& base, const nlohmann::json& j,
                  const std::string& text) {
  {
    std::ofstream out(base.string() + ".json");
    if (!out) throw std::runtime_error("cannot write report: " + base.string() + ".json");
    out << j.dump(2) << '\n';
  }
  std::ofstream out(base.string() + ".txt");
  if (!out) throw std::runtime_error("cannot write report: " + base.string() + ".txt");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memrag: editable memory-graph retrieval-augmented generation"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint_path, user;
  std::int64_t seed = -1;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "output directory override");
  app.add_option("--seed", seed, "seed override");

  auto* gen = app.add_subcommand("gen-data", "generate corpus, queries, edit stream");
  auto* build = app.add_subcommand("build", "train embeddings and build graphs");
  auto* train = app.add_subcommand("train", "warm-start + policy-gradient training");
  std::string resume_path;
  train->add_option("--resume", resume_path, "continue from a checkpoint");
  auto* eval = app.add_subcommand("eval", "evaluate QA / autofill / user services");
  eval->add_option("--checkpoint", checkpoint_path, "policy checkpoint");
  auto* edits = app.add_subcommand("edits-exp", "weekly continuous-edit experiment");
  edits->add_option("--checkpoint", checkpoint_path, "policy checkpoint");
  auto* ablate = app.add_subcommand("ablate", "train and evaluate ablation variants");
  auto* paramk = app.add_subcommand("param-k", "sweep activation K from 1 to 5");
  paramk->add_option("--checkpoint", checkpoint_path, "policy checkpoint");
  auto* repl = app.add_subcommand("repl", "interactive edit/query session");
  repl->add_option("--checkpoint", checkpoint_path, "policy checkpoint");
  repl->add_option("--user", user, "user id (default: first test user)");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config = resolve_config(config_path, out_dir, seed);
    const auto default_ckpt = config.out_dir / "checkpoint.json";
    if (checkpoint_path.empty()) checkpoint_path = default_ckpt.string();

    if (gen->parsed()) {
      const GenDataResult r = cmd_gen_data(config);
      std::printf("wrote %s: %d train users (%d memories, %d qa), "
                  "%d test users (%d memories, %d qa), %d af/us queries, %d edits\n",
                  config.out_dir.c_str(), r.train_users, r.train_memories, r.train_qa,
                  r.test_users, r.test_memories, r.test_qa, r.af_us_queries, r.edits);
    } else if (build->parsed()) {
      const BuildResult r = cmd_build(config);
      std::printf("built %d graphs (%d entities, %d edges)\n", r.graphs_built,
                  r.entities, r.edges);
    } else if (train->parsed()) {
      TrainOptions options;
      if (!resume_path.empty()) options.resume = load_checkpoint(resume_path);
      const TrainResult r = cmd_train(config, options);
      save_checkpoint(r.checkpoint, default_ckpt);
      nlohmann::json curves;
      curves["ws_loss"] = r.ws_loss;
      curves["pg_return"] = r.pg_return;
      std::ofstream cf(config.out_dir / "curves.json");
      cf << curves.dump() << '\n';
      double ws_first = r.ws_loss.empty() ? 0.0 : r.ws_loss.front();
      double ws_last = r.ws_loss.empty() ? 0.0 : r.ws_loss.back();
      std::printf("trained: ws %zu episodes (loss %.4f -> %.4f), pg %zu episodes; "
                  "checkpoint %s\n",
                  r.ws_loss.size(), ws_first, ws_last, r.pg_return.size(),
                  default_ckpt.c_str());
    } else if (eval->parsed()) {
      const Checkpoint ckpt = load_checkpoint(checkpoint_path);
      const EvalReport r = cmd_eval(config, ckpt);
      write_report(config.out_dir / "eval_report", eval_report_to_json(r),
                   eval_report_to_text(r));
      std::fputs(eval_report_to_text(r).c_str(), stdout);
    } else if (edits->parsed()) {
      const Checkpoint ckpt = load_checkpoint(checkpoint_path);
      const auto weekly = cmd_edits_experiment(config, ckpt);
      nlohmann::json j = nlohmann::json::array();
      std::string text = "week     QA R-L   AF EM    US EM  supersd%\n";
      for (const auto& w : weekly) {
        nlohmann::json row = eval_report_to_json(w.report);
        row["week"] = w.week;
        j.push_back(std::move(row));
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%4d %10.2f %7.2f %8.2f %9.2f\n", w.week,
                      w.report.qa.rougel, w.report.af_em, w.report.us_mean_em,
                      w.report.superseded_share);
        text += buf;
      }
      write_report(config.out_dir / "edits_report", j, text);
      std::fputs(text.c_str(), stdout);
    } else if (ablate->parsed()) {
      const auto rows = cmd_ablate(config);
      nlohmann::json j = nlohmann::json::array();
      std::string text = "variant            R-1     R-2     R-L    BLEU  Recall\n";
      for (const auto& row : rows) {
        nlohmann::json rj = eval_report_to_json(row.report);
        rj["variant"] = row.variant;
        j.push_back(std::move(rj));
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-14s %7.2f %7.2f %7.2f %7.2f %7.2f\n",
                      row.variant.c_str(), row.report.qa.rouge1, row.report.qa.rouge2,
                      row.report.qa.rougel, row.report.qa.bleu, row.report.qa.recall);
        text += buf;
      }
      write_report(config.out_dir / "ablation_report", j, text);
      std::fputs(text.c_str(), stdout);
    } else if (paramk->parsed()) {
      const Checkpoint ckpt = load_checkpoint(checkpoint_path);
      const auto rows = cmd_param_k(config, ckpt);
      nlohmann::json j = nlohmann::json::array();
      std::string text = "   K     R-L  Recall  Inference(s)\n";
      for (const auto& row : rows) {
        j.push_back({{"k", row.k},
                     {"rougel", row.rougel},
                     {"recall", row.recall},
                     {"median_latency_s", row.median_latency_s}});
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%4d %7.2f %7.2f %13.5f\n", row.k, row.rougel,
                      row.recall, row.median_latency_s);
        text += buf;
      }
      write_report(config.out_dir / "param_k_report", j, text);
      std::fputs(text.c_str(), stdout);
    } else if (repl->parsed()) {
      const Checkpoint ckpt = load_checkpoint(checkpoint_path);
      cmd_repl(config, ckpt, std::cin, std::cout, user);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
