#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "memrag/generation.hpp"
#include "memrag/graph.hpp"
#include "memrag/metrics.hpp"
#include "memrag/policy.hpp"
#include "memrag/state.hpp"

namespace memrag {

// Generation plus metric scoring against a fixed reference, memoized on
// (question id, selected memory-id set).
class AnswerScorer {
 public:
  AnswerScorer(GeneratorInterface& generator, RewardMetric metric,
               AnswerCache* cache = nullptr)
      : generator_(generator), metric_(metric), cache_(cache) {}

  AnswerCache::Entry score(const std::string& question_id, const std::string& question,
                           const std::string& reference, const Emg& graph,
                           const std::vector<std::string>& memory_ids);

  RewardMetric metric() const { return metric_; }

 private:
  GeneratorInterface& generator_;
  RewardMetric metric_;
  AnswerCache* cache_;
};

// Attachment nodes of the Top-k memories by question/memory cosine,
// deduplicated, in score order (id tie-break). Fewer memories than k
// returns everything; an empty graph returns an empty list.
std::vector<std::string> activate(const Emg& graph, const QAPair& question, int k);

// Stored anchors pass through; otherwise a fixed fallback: longest
// capitalized token span and the first verb from a small pattern table.
std::pair<std::string, std::string> extract_question_anchor(const QAPair& question);

struct FrontierItem {
  std::string node;
  std::string relation;   // relation label of the memory's own edge
  std::string memory_id;
};

struct EpisodeConfig {
  int top_k = 3;
  int max_selected = 16;
  // Seed traversal with every attached node instead of Top-K activation
  // (the traversal-from-root ablation).
  bool activate_from_root = false;
};

struct EpisodeContext {
  const Emg* graph = nullptr;
  QAPair question;
  std::string question_id;
  Vector q_vec, nq_vec, rq_vec;
  std::vector<std::string> activated;
  std::vector<FrontierItem> frontier;  // stack; back is next
  std::optional<FrontierItem> current;
  std::vector<std::string> selected;
  std::set<std::string> visited;
  std::set<std::string> expanded;
  int step_count = 0;
  int max_selected = 16;
  double initial_metric = 0.0;
  double current_metric = 0.0;
};

struct StepResult {
  std::optional<EnvState> next_state;
  double reward = 0.0;
  bool done = false;
};

EpisodeContext begin_episode(const Emg& graph, const QAPair& question,
                             const EpisodeConfig& config, AnswerScorer& scorer);

bool episode_done(const EpisodeContext& ctx);

EnvState make_state(const EpisodeContext& ctx, const std::string& node,
                    const std::string& incoming_relation, const MemoryRecord& memory);

// Current decision-point state; episode must not be done.
EnvState current_state(const EpisodeContext& ctx);

// Action 1 selects the current memory and extends the depth-first frontier
// with unvisited neighbors; the reward is the metric delta of the
// regenerated answer. Action 0 abandons the branch with zero reward.
// Throws when the episode is already done.
StepResult step(EpisodeContext& ctx, int action, AnswerScorer& scorer);

enum class RunMode { Greedy, Sample };

struct RunResult {
  std::vector<std::string> selected;
  std::vector<StepRecord> trajectory;
  double initial_metric = 0.0;
  double final_metric = 0.0;
  std::string final_answer;
};

RunResult run_episode(const Emg& graph, const QAPair& question, const PolicyNet& policy,
                      AnswerScorer& scorer, const EpisodeConfig& config, RunMode mode,
                      std::uint64_t seed = 0);

// Include-everything traversal that labels each visited memory by required-
// set membership; used to gather warm-start supervision without generation.
std::vector<LabeledState> collect_labeled_states(const Emg& graph, const QAPair& question,
                                                 const EpisodeConfig& config);

void dump_trajectory(std::ostream& out, const std::vector<StepRecord>& trajectory);

}  // namespace memrag
