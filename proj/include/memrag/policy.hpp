#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "memrag/state.hpp"

namespace memrag {

struct TrainConfig {
  double lr = 0.001;
  double discount = 0.99;
  int ws_episodes = 1000;
  int pg_episodes = 100;
  std::uint64_t seed = 0;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;

  bool operator==(const AdamState&) const = default;
};

// 3 -> 20 (tanh) -> 2 (softmax) action policy. Parameters are stored flat:
// W1 row-major, b1, W2 row-major, b2. Output index 0 is "include".
class PolicyNet {
 public:
  static constexpr int kIn = 3;
  static constexpr int kHidden = 20;
  static constexpr int kOut = 2;
  static constexpr int kParamCount =
      kHidden * kIn + kHidden + kOut * kHidden + kOut;

  PolicyNet();                               // zero parameters
  explicit PolicyNet(std::uint64_t seed);    // uniform(-0.1, 0.1)

  // (p_include, p_stop); softmax output clamped to [1e-12, 1 - 1e-12].
  // Throws on a non-finite state.
  std::pair<double, double> forward(const EnvState& state) const;

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  AdamState& adam() { return adam_; }
  const AdamState& adam() const { return adam_; }

  bool operator==(const PolicyNet&) const = default;

 private:
  std::vector<double> params_;
  AdamState adam_;
};

// One bias-corrected Adam update (beta1 0.9, beta2 0.999, eps 1e-8).
// Throws when the gradient shape does not match the parameters.
void adam_step(std::vector<double>& params, AdamState& state,
               std::span<const double> grads, double lr);

// Binary cross-entropy against the include probability, averaged over the
// batch.
double bce_loss(const PolicyNet& net, std::span<const LabeledState> samples);
std::vector<double> bce_gradient(const PolicyNet& net,
                                 std::span<const LabeledState> samples);

// One Adam step on a sample batch; returns the pre-update mean loss.
double warm_start_step(PolicyNet& net, std::span<const LabeledState> samples,
                       double lr);

struct WarmStartReport {
  std::vector<double> episode_mean_loss;
};

// Full-batch warm start: config.ws_episodes Adam steps over the sample set.
WarmStartReport warm_start(PolicyNet& net, const std::vector<LabeledState>& samples,
                           const TrainConfig& config);

// REINFORCE objective over one trajectory with discounted returns-to-go:
// L = sum_t -G_t * ln pi(a_t | s_t).
double pg_loss(const PolicyNet& net, std::span<const StepRecord> trajectory,
               double discount);
std::vector<double> pg_gradient(const PolicyNet& net,
                                std::span<const StepRecord> trajectory,
                                double discount);

// One Adam step along the REINFORCE gradient of the trajectory.
void pg_update(PolicyNet& net, std::span<const StepRecord> trajectory,
               const TrainConfig& config);

// Returns-to-go G_t for a trajectory.
std::vector<double> returns_to_go(std::span<const StepRecord> trajectory,
                                  double discount);

// Versioned checkpoint with Adam state; round-trips bit-exactly.
std::string policy_to_json(const PolicyNet& net);
PolicyNet policy_from_json(const std::string& bytes);
void save_policy(const PolicyNet& net, const std::filesystem::path& path);
PolicyNet load_policy(const std::filesystem::path& path);

}  // namespace memrag
