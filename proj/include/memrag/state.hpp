#pragma once

namespace memrag {

// Traversal-step observation: three cosine similarities between the
// question side and the visited (node, relation, memory).
struct EnvState {
  double sim_entity = 0.0;
  double sim_relation = 0.0;
  double sim_memory = 0.0;

  bool operator==(const EnvState&) const = default;
};

struct StepRecord {
  EnvState state;
  int action = 0;  // 1 include, 0 stop branch
  double reward = 0.0;
};

struct LabeledState {
  EnvState state;
  int label = 0;  // 1 iff the memory is in the question's required set
};

}  // namespace memrag
