#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memrag/env.hpp"
#include "memrag/graph.hpp"
#include "memrag/metrics.hpp"
#include "memrag/policy.hpp"
#include "memrag/synth.hpp"
#include "memrag/transe.hpp"

namespace memrag {

struct RunConfig {
  CorpusSpec train_corpus;
  CorpusSpec test_corpus;
  EditStreamSpec edit_stream;
  TrainConfig train;
  TransEConfig transe;
  int top_k = 3;
  int max_selected = 16;
  RewardMetric reward_metric = RewardMetric::RougeL;
  std::string generator = "mock";  // "mock" or "remote"
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 42;
};

RunConfig default_run_config();
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

// Stable hex digest of the canonical config dump; reports and checkpoints
// embed it so mismatched artifacts are detectable.
std::string config_hash(const RunConfig& config);

struct GenDataResult {
  int train_users = 0;
  int test_users = 0;
  int train_memories = 0;
  int test_memories = 0;
  int train_qa = 0;
  int test_qa = 0;
  int af_us_queries = 0;
  int edits = 0;
};

GenDataResult cmd_gen_data(const RunConfig& config);

struct BuildResult {
  int graphs_built = 0;
  int entities = 0;
  int edges = 0;
};

BuildResult cmd_build(const RunConfig& config);

struct Checkpoint {
  PolicyNet net;
  int ws_done = 0;
  int pg_done = 0;
  std::string config_hash;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<double> ws_loss;   // per-episode mean warm-start loss
  std::vector<double> pg_return; // per-episode undiscounted reward sum
};

struct TrainOptions {
  bool activate_from_root = false;  // traversal-from-root ablation
  std::optional<int> ws_episodes;   // override config
  std::optional<int> pg_episodes;
  std::optional<Checkpoint> resume;
};

TrainResult cmd_train(const RunConfig& config, const TrainOptions& options = {});

struct AppScores {
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougel = 0.0;
  double bleu = 0.0;
  double recall = 0.0;     // required-memory recall, 0..100
  double precision = 0.0;  // required-memory precision, 0..100
  double median_latency_s = 0.0;
};

struct EvalReport {
  std::string config_hash;
  std::string code_version;
  int n_qa = 0;
  int n_af = 0;
  int n_us_reminder = 0;
  int n_us_travel = 0;
  AppScores qa;        // policy-driven selection
  AppScores baseline;  // naive Top-K retrieval
  double af_em = 0.0;
  double us_reminder_em = 0.0;
  double us_travel_em = 0.0;
  double us_mean_em = 0.0;
  // Share (0..100) of generated QA answers containing a superseded value;
  // only meaningful inside the edits experiment.
  double superseded_share = 0.0;
};

nlohmann::json eval_report_to_json(const EvalReport& report);
std::string eval_report_to_text(const EvalReport& report);

struct EvalOptions {
  std::optional<int> k_override;
  bool activate_from_root = false;
  // Superseded tail values per user for the stale-answer scan.
  std::map<std::string, std::vector<std::string>> superseded;
};

// Evaluates greedy-mode episodes per question over prebuilt graphs.
EvalReport evaluate(const RunConfig& config, const PolicyNet& net,
                    const std::vector<Session>& sessions,
                    const std::map<std::string, Emg>& graphs,
                    const std::vector<AfUsQuery>& af_us, const MockOracle& oracle,
                    const EvalOptions& options = {});

EvalReport cmd_eval(const RunConfig& config, const Checkpoint& ckpt);

struct WeeklyReport {
  int week = 0;
  EvalReport report;
};

std::vector<WeeklyReport> cmd_edits_experiment(const RunConfig& config,
                                               const Checkpoint& ckpt);

struct AblationRow {
  std::string variant;
  EvalReport report;
};

std::vector<AblationRow> cmd_ablate(const RunConfig& config);

struct ParamKRow {
  int k = 0;
  double rougel = 0.0;
  double recall = 0.0;
  double median_latency_s = 0.0;
};

std::vector<ParamKRow> cmd_param_k(const RunConfig& config, const Checkpoint& ckpt);

void cmd_repl(const RunConfig& config, const Checkpoint& ckpt, std::istream& in,
              std::ostream& out, const std::string& user_id = "");

// Loads the graphs and sessions that gen-data/build wrote.
std::vector<Session> load_split(const RunConfig& config, const std::string& split);
std::map<std::string, Emg> load_graphs(const RunConfig& config,
                                       const std::vector<Session>& sessions);

std::unique_ptr<GeneratorInterface> make_generator(const RunConfig& config,
                                                   const MockOracle& oracle);

}  // namespace memrag
