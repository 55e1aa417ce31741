#include "memrag/policy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "memrag/util.hpp"

namespace memrag {

namespace {

constexpr double kProbFloor = 1e-12;

constexpr int kW1 = 0;
constexpr int kB1 = kW1 + PolicyNet::kHidden * PolicyNet::kIn;
constexpr int kW2 = kB1 + PolicyNet::kHidden;
constexpr int kB2 = kW2 + PolicyNet::kOut * PolicyNet::kHidden;

struct ForwardPass {
  double hidden[PolicyNet::kHidden];
  double probs[PolicyNet::kOut];
};

ForwardPass run_forward(const std::vector<double>& p, const EnvState& s) {
  const double in[PolicyNet::kIn] = {s.sim_entity, s.sim_relation, s.sim_memory};
  ForwardPass f;
  for (int i = 0; i < PolicyNet::kHidden; ++i) {
    double z = p[kB1 + i];
    for (int j = 0; j < PolicyNet::kIn; ++j) {
      z += p[kW1 + i * PolicyNet::kIn + j] * in[j];
    }
    f.hidden[i] = std::tanh(z);
  }
  double logits[PolicyNet::kOut];
  double max_logit = -1e300;
  for (int o = 0; o < PolicyNet::kOut; ++o) {
    double z = p[kB2 + o];
    for (int i = 0; i < PolicyNet::kHidden; ++i) {
      z += p[kW2 + o * PolicyNet::kHidden + i] * f.hidden[i];
    }
    logits[o] = z;
    max_logit = std::max(max_logit, z);
  }
  double denom = 0.0;
  for (int o = 0; o < PolicyNet::kOut; ++o) {
    logits[o] = std::exp(logits[o] - max_logit);
    denom += logits[o];
  }
  for (int o = 0; o < PolicyNet::kOut; ++o) {
    double prob = logits[o] / denom;
    f.probs[o] = std::min(1.0 - kProbFloor, std::max(kProbFloor, prob));
  }
  return f;
}

// Backpropagates dL/dlogits into the flat gradient vector.
void accumulate_gradient(const std::vector<double>& p, const EnvState& s,
                         const ForwardPass& f, const double dlogits[PolicyNet::kOut],
                         std::vector<double>& grad) {
  const double in[PolicyNet::kIn] = {s.sim_entity, s.sim_relation, s.sim_memory};
  double dhidden[PolicyNet::kHidden] = {0.0};
  for (int o = 0; o < PolicyNet::kOut; ++o) {
    grad[kB2 + o] += dlogits[o];
    for (int i = 0; i < PolicyNet::kHidden; ++i) {
      grad[kW2 + o * PolicyNet::kHidden + i] += dlogits[o] * f.hidden[i];
      dhidden[i] += dlogits[o] * p[kW2 + o * PolicyNet::kHidden + i];
    }
  }
  for (int i = 0; i < PolicyNet::kHidden; ++i) {
    const double dz = dhidden[i] * (1.0 - f.hidden[i] * f.hidden[i]);
    grad[kB1 + i] += dz;
    for (int j = 0; j < PolicyNet::kIn; ++j) {
      grad[kW1 + i * PolicyNet::kIn + j] += dz * in[j];
    }
  }
}

bool finite_state(const EnvState& s) {
  return std::isfinite(s.sim_entity) && std::isfinite(s.sim_relation) &&
         std::isfinite(s.sim_memory);
}

}  // namespace

PolicyNet::PolicyNet() : params_(kParamCount, 0.0) {
  adam_.m.assign(kParamCount, 0.0);
  adam_.v.assign(kParamCount, 0.0);
}

PolicyNet::PolicyNet(std::uint64_t seed) : PolicyNet() {
  Rng rng(seed);
  for (double& p : params_) p = rng.uniform(-0.1, 0.1);
}

std::pair<double, double> PolicyNet::forward(const EnvState& state) const {
  if (!finite_state(state)) {
    throw std::invalid_argument("policy forward: non-finite state");
  }
  const ForwardPass f = run_forward(params_, state);
  return {f.probs[0], f.probs[1]};
}

void adam_step(std::vector<double>& params, AdamState& state,
               std::span<const double> grads, double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw std::invalid_argument("adam_step: non-finite gradient");
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

double bce_loss(const PolicyNet& net, std::span<const LabeledState> samples) {
  if (samples.empty()) throw std::invalid_argument("bce_loss: empty batch");
  double sum = 0.0;
  for (const auto& s : samples) {
    const ForwardPass f = run_forward(net.params(), s.state);
    const double p_include = f.probs[0];
    sum -= s.label * std::log(p_include) + (1 - s.label) * std::log(1.0 - p_include);
  }
  return sum / static_cast<double>(samples.size());
}

std::vector<double> bce_gradient(const PolicyNet& net,
                                 std::span<const LabeledState> samples) {
  if (samples.empty()) throw std::invalid_argument("bce_gradient: empty batch");
  std::vector<double> grad(PolicyNet::kParamCount, 0.0);
  const double scale = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) {
    const ForwardPass f = run_forward(net.params(), s.state);
    // Two-class BCE on the include probability is softmax cross-entropy
    // against the one-hot target (y, 1-y): dL/dz = p - target.
    const double target0 = static_cast<double>(s.label);
    const double dlogits[PolicyNet::kOut] = {(f.probs[0] - target0) * scale,
                                             (f.probs[1] - (1.0 - target0)) * scale};
    accumulate_gradient(net.params(), s.state, f, dlogits, grad);
  }
  return grad;
}

double warm_start_step(PolicyNet& net, std::span<const LabeledState> samples,
                       double lr) {
  const double loss = bce_loss(net, samples);
  const std::vector<double> grad = bce_gradient(net, samples);
  adam_step(net.params(), net.adam(), grad, lr);
  return loss;
}

WarmStartReport warm_start(PolicyNet& net, const std::vector<LabeledState>& samples,
                           const TrainConfig& config) {
  if (samples.empty()) throw std::invalid_argument("warm_start: empty sample set");
  WarmStartReport report;
  report.episode_mean_loss.reserve(config.ws_episodes);
  for (int e = 0; e < config.ws_episodes; ++e) {
    report.episode_mean_loss.push_back(warm_start_step(net, samples, config.lr));
  }
  return report;
}

std::vector<double> returns_to_go(std::span<const StepRecord> trajectory,
                                  double discount) {
  std::vector<double> g(trajectory.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = trajectory.size(); i-- > 0;) {
    acc = trajectory[i].reward + discount * acc;
    g[i] = acc;
  }
  return g;
}

double pg_loss(const PolicyNet& net, std::span<const StepRecord> trajectory,
               double discount) {
  if (trajectory.empty()) throw std::invalid_argument("pg_loss: empty trajectory");
  const std::vector<double> g = returns_to_go(trajectory, discount);
  double loss = 0.0;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const ForwardPass f = run_forward(net.params(), trajectory[i].state);
    const int idx = trajectory[i].action == 1 ? 0 : 1;
    loss -= g[i] * std::log(f.probs[idx]);
  }
  return loss;
}

std::vector<double> pg_gradient(const PolicyNet& net,
                                std::span<const StepRecord> trajectory,
                                double discount) {
  if (trajectory.empty()) throw std::invalid_argument("pg_gradient: empty trajectory");
  const std::vector<double> g = returns_to_go(trajectory, discount);
  std::vector<double> grad(PolicyNet::kParamCount, 0.0);
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const ForwardPass f = run_forward(net.params(), trajectory[i].state);
    const int idx = trajectory[i].action == 1 ? 0 : 1;
    // d(-G ln p_a)/dz = G * (p - onehot(a))
    double dlogits[PolicyNet::kOut];
    for (int o = 0; o < PolicyNet::kOut; ++o) {
      dlogits[o] = g[i] * (f.probs[o] - (o == idx ? 1.0 : 0.0));
    }
    accumulate_gradient(net.params(), trajectory[i].state, f, dlogits, grad);
  }
  return grad;
}

void pg_update(PolicyNet& net, std::span<const StepRecord> trajectory,
               const TrainConfig& config) {
  if (trajectory.empty()) throw std::invalid_argument("pg_update: empty trajectory");
  const std::vector<double> grad = pg_gradient(net, trajectory, config.discount);
  adam_step(net.params(), net.adam(), grad, config.lr);
}

namespace {
constexpr const char* kFormat = "memrag-policy";
constexpr int kVersion = 1;
}  // namespace

std::string policy_to_json(const PolicyNet& net) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["params"] = net.params();
  j["adam_m"] = net.adam().m;
  j["adam_v"] = net.adam().v;
  j["adam_t"] = net.adam().t;
  return j.dump();
}

PolicyNet policy_from_json(const std::string& bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("corrupt policy checkpoint: ") + e.what());
  }
  if (j.value("format", "") != kFormat || j.value("version", -1) != kVersion) {
    throw std::runtime_error("unsupported policy checkpoint version");
  }
  PolicyNet net;
  net.params() = j.at("params").get<std::vector<double>>();
  net.adam().m = j.at("adam_m").get<std::vector<double>>();
  net.adam().v = j.at("adam_v").get<std::vector<double>>();
  net.adam().t = j.at("adam_t").get<std::int64_t>();
  if (net.params().size() != PolicyNet::kParamCount) {
    throw std::runtime_error("corrupt policy checkpoint: wrong parameter count");
  }
  return net;
}

void save_policy(const PolicyNet& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out << policy_to_json(net);
}

PolicyNet load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return policy_from_json(ss.str());
}

}  // namespace memrag
