#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "memrag/embedding.hpp"
#include "memrag/memory.hpp"

namespace memrag {

struct TransEConfig {
  std::size_t dim = kTransEDim;
  double margin = 1.0;
  double lr = 0.01;
  int epochs = 200;
  std::uint64_t seed = 0;
};

struct TransEModel {
  std::map<std::string, Vector> entity_table;
  std::map<std::string, Vector> relation_table;
  std::size_t dim = 0;
  double margin = 1.0;
  int trained_epochs = 0;

  bool has_entity(const std::string& name) const { return entity_table.count(name) > 0; }
  bool has_relation(const std::string& name) const { return relation_table.count(name) > 0; }

  bool operator==(const TransEModel&) const = default;
};

// Margin-ranking training with uniformly corrupted triples, L2 translation
// distance, plain SGD, entity vectors renormalized every epoch. Fully
// deterministic for a fixed seed. Throws on an empty triple set.
TransEModel train_transe(const std::vector<Triple>& triples, const TransEConfig& config,
                         std::vector<double>* epoch_mean_loss = nullptr);

// ||h + r - t||_2; throws naming any id absent from the tables.
double transe_score(const TransEModel& model, const std::string& head,
                    const std::string& relation, const std::string& tail);

// Nearest subclass by L2 distance between entity and subclass vectors,
// lexicographic tie-break. Subclasses must be present in the entity table
// (they enter training through instance-of triples).
std::string assign_to_subclass(const std::string& entity, const TransEModel& model,
                               const std::vector<std::string>& subclasses);

// Versioned JSON snapshot of the embedding tables.
std::string transe_to_json(const TransEModel& model);
TransEModel transe_from_json(const std::string& bytes);
void save_transe(const TransEModel& model, const std::filesystem::path& path);
TransEModel load_transe(const std::filesystem::path& path);

}  // namespace memrag
