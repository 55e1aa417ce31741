#include "memrag/transe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "memrag/util.hpp"

namespace memrag {

namespace {

double l2_distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a.c[i] - b.c[i];
    s += d * d;
  }
  return std::sqrt(s);
}

struct IndexedTriple {
  std::size_t h, r, t;
};

}  // namespace

TransEModel train_transe(const std::vector<Triple>& triples, const TransEConfig& config,
                         std::vector<double>* epoch_mean_loss) {
  if (triples.empty()) throw std::invalid_argument("train_transe: empty triple set");
  if (config.dim == 0) throw std::invalid_argument("train_transe: dim must be positive");

  std::set<std::string> entity_set, relation_set;
  for (const auto& t : triples) {
    entity_set.insert(t.head_entity);
    entity_set.insert(t.tail_entity);
    relation_set.insert(t.relation);
  }
  const std::vector<std::string> entities(entity_set.begin(), entity_set.end());
  const std::vector<std::string> relations(relation_set.begin(), relation_set.end());

  std::map<std::string, std::size_t> entity_idx, relation_idx;
  for (std::size_t i = 0; i < entities.size(); ++i) entity_idx[entities[i]] = i;
  for (std::size_t i = 0; i < relations.size(); ++i) relation_idx[relations[i]] = i;

  std::vector<IndexedTriple> data;
  data.reserve(triples.size());
  for (const auto& t : triples) {
    data.push_back({entity_idx[t.head_entity], relation_idx[t.relation],
                    entity_idx[t.tail_entity]});
  }
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> gold;
  for (const auto& t : data) gold.insert({t.h, t.r, t.t});

  Rng rng(config.seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(config.dim));
  auto init_vec = [&] {
    Vector v(config.dim);
    for (double& x : v.c) x = rng.uniform(-bound, bound);
    return v;
  };
  std::vector<Vector> ent(entities.size()), rel(relations.size());
  for (auto& v : ent) v = init_vec();
  for (auto& v : rel) {
    v = init_vec();
    v.l2_normalize();
  }
  for (auto& v : ent) v.l2_normalize();

  const double margin = config.margin;
  const double lr = config.lr;
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  if (epoch_mean_loss) epoch_mean_loss->clear();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t k : order) {
      const IndexedTriple pos = data[k];
      // Corrupt head or tail uniformly; resample until the corrupted triple
      // is not a gold one (possible whenever >1 entity exists).
      IndexedTriple neg = pos;
      const bool corrupt_tail = rng.bernoulli(0.5);
      for (int attempt = 0; attempt < 64; ++attempt) {
        const std::size_t cand = rng.below(entities.size());
        if (corrupt_tail) neg.t = cand; else neg.h = cand;
        if (!gold.count({neg.h, neg.r, neg.t})) break;
        neg = pos;
      }
      if (gold.count({neg.h, neg.r, neg.t})) {
        continue;  // degenerate vocabulary, nothing to rank against
      }

      Vector diff_pos(config.dim), diff_neg(config.dim);
      for (std::size_t i = 0; i < config.dim; ++i) {
        diff_pos.c[i] = ent[pos.h].c[i] + rel[pos.r].c[i] - ent[pos.t].c[i];
        diff_neg.c[i] = ent[neg.h].c[i] + rel[neg.r].c[i] - ent[neg.t].c[i];
      }
      const double d_pos = diff_pos.norm();
      const double d_neg = diff_neg.norm();
      const double loss = margin + d_pos - d_neg;
      if (loss > 0.0) {
        loss_sum += loss;
        // Subgradient of the L2 norms; guard the nondifferentiable point.
        if (d_pos > 1e-12) {
          for (std::size_t i = 0; i < config.dim; ++i) {
            const double g = diff_pos.c[i] / d_pos * lr;
            ent[pos.h].c[i] -= g;
            rel[pos.r].c[i] -= g;
            ent[pos.t].c[i] += g;
          }
        }
        if (d_neg > 1e-12) {
          for (std::size_t i = 0; i < config.dim; ++i) {
            const double g = diff_neg.c[i] / d_neg * lr;
            ent[neg.h].c[i] += g;
            rel[neg.r].c[i] += g;
            ent[neg.t].c[i] -= g;
          }
        }
      }
    }
    for (auto& v : ent) v.l2_normalize();
    if (epoch_mean_loss) {
      epoch_mean_loss->push_back(loss_sum / static_cast<double>(data.size()));
    }
  }

  TransEModel model;
  model.dim = config.dim;
  model.margin = config.margin;
  model.trained_epochs = config.epochs;
  for (std::size_t i = 0; i < entities.size(); ++i) model.entity_table[entities[i]] = ent[i];
  for (std::size_t i = 0; i < relations.size(); ++i) model.relation_table[relations[i]] = rel[i];
  return model;
}

double transe_score(const TransEModel& model, const std::string& head,
                    const std::string& relation, const std::string& tail) {
  auto eh = model.entity_table.find(head);
  if (eh == model.entity_table.end()) throw std::runtime_error("unknown entity: '" + head + "'");
  auto er = model.relation_table.find(relation);
  if (er == model.relation_table.end()) throw std::runtime_error("unknown relation: '" + relation + "'");
  auto et = model.entity_table.find(tail);
  if (et == model.entity_table.end()) throw std::runtime_error("unknown entity: '" + tail + "'");
  Vector diff(model.dim);
  for (std::size_t i = 0; i < model.dim; ++i) {
    diff.c[i] = eh->second.c[i] + er->second.c[i] - et->second.c[i];
  }
  return diff.norm();
}

std::string assign_to_subclass(const std::string& entity, const TransEModel& model,
                               const std::vector<std::string>& subclasses) {
  auto it = model.entity_table.find(entity);
  if (it == model.entity_table.end()) {
    throw std::runtime_error("unknown entity: '" + entity + "'");
  }
  if (subclasses.empty()) throw std::invalid_argument("assign_to_subclass: no candidates");

  std::vector<std::string> sorted = subclasses;
  std::sort(sorted.begin(), sorted.end());
  std::string best;
  double best_dist = 0.0;
  for (const auto& s : sorted) {
    auto sv = model.entity_table.find(s);
    if (sv == model.entity_table.end()) {
      throw std::runtime_error("unknown subclass entity: '" + s + "'");
    }
    const double d = l2_distance(it->second, sv->second);
    if (best.empty() || d < best_dist) {
      best = s;
      best_dist = d;
    }
  }
  return best;
}

namespace {
constexpr const char* kFormat = "memrag-transe";
constexpr int kVersion = 1;
}  // namespace

std::string transe_to_json(const TransEModel& model) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["dim"] = model.dim;
  j["margin"] = model.margin;
  j["trained_epochs"] = model.trained_epochs;
  nlohmann::json ents = nlohmann::json::object();
  for (const auto& [name, v] : model.entity_table) ents[name] = v.c;
  nlohmann::json rels = nlohmann::json::object();
  for (const auto& [name, v] : model.relation_table) rels[name] = v.c;
  j["entities"] = std::move(ents);
  j["relations"] = std::move(rels);
  return j.dump();
}

TransEModel transe_from_json(const std::string& bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("corrupt embedding snapshot: ") + e.what());
  }
  if (j.value("format", "") != kFormat || j.value("version", -1) != kVersion) {
    throw std::runtime_error("unsupported embedding snapshot version");
  }
  TransEModel model;
  model.dim = j.at("dim").get<std::size_t>();
  model.margin = j.at("margin").get<double>();
  model.trained_epochs = j.at("trained_epochs").get<int>();
  for (const auto& [name, arr] : j.at("entities").items()) {
    model.entity_table[name] = Vector(arr.get<std::vector<double>>());
  }
  for (const auto& [name, arr] : j.at("relations").items()) {
    model.relation_table[name] = Vector(arr.get<std::vector<double>>());
  }
  return model;
}

void save_transe(const TransEModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model: " + path.string());
  out << transe_to_json(model);
}

TransEModel load_transe(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return transe_from_json(ss.str());
}

}  // namespace memrag
