#include "memrag/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "memrag/taxonomy.hpp"
#include "memrag/util.hpp"

namespace memrag {

std::vector<Triple> training_triples(const Session& session) {
  std::vector<Triple> triples;
  triples.reserve(session.memories.size() * 2);
  for (const auto& m : session.memories) {
    triples.push_back(m.triple);
    if (m.subclass_hint && taxonomy::is_subclass(*m.subclass_hint)) {
      triples.push_back({m.triple.tail_entity, kInstanceOfRelation, *m.subclass_hint});
    }
  }
  return triples;
}

Emg Emg::build(const Session& session, const TransEModel& transe) {
  Emg g;
  g.user_id_ = session.user_id;

  const auto& subclasses = taxonomy::all_subclasses();
  for (const auto& m : session.memories) {
    const auto violations = validate_record(m);
    if (!violations.empty()) {
      throw std::runtime_error("invalid memory '" + m.id + "': " + violations.front());
    }
    for (const std::string& name : {m.triple.head_entity, m.triple.tail_entity}) {
      if (g.nodes_.count(name)) continue;
      if (!transe.has_entity(name)) {
        throw std::runtime_error("entity missing from embedding model: '" + name + "'");
      }
      g.nodes_[name] = {name, assign_to_subclass(name, transe, subclasses),
                        embed_text(name)};
    }
    Edge edge{m.triple.head_entity, m.triple.relation, m.triple.tail_entity};
    if (std::find(g.edges_.begin(), g.edges_.end(), edge) == g.edges_.end()) {
      g.edges_.push_back(edge);
    }
    g.add_memory(m, m.triple.tail_entity);
  }
  g.rebuild_adjacency();
  g.recompute_centers();
  return g;
}

void Emg::add_memory(const MemoryRecord& record, const std::string& node) {
  if (memories_.count(record.id)) {
    throw std::runtime_error("duplicate memory id '" + record.id + "'");
  }
  memories_[record.id] = {record, embed_text(record.text), node, false};
  attachments_[node].push_back(record.id);
}

const StoredMemory* Emg::find_memory(const std::string& id) const {
  auto it = memories_.find(id);
  return it == memories_.end() ? nullptr : &it->second;
}

std::size_t Emg::live_memory_count() const {
  std::size_t n = 0;
  for (const auto& [id, m] : memories_) {
    if (!m.retired) ++n;
  }
  return n;
}

std::vector<std::string> Emg::live_memory_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, m] : memories_) {
    if (!m.retired) ids.push_back(id);
  }
  return ids;  // map order is already ascending
}

std::vector<std::string> Emg::live_attachments(const std::string& node) const {
  std::vector<std::string> ids;
  auto it = attachments_.find(node);
  if (it == attachments_.end()) return ids;
  for (const auto& id : it->second) {
    if (!memories_.at(id).retired) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::string> Emg::neighbors(const std::string& node) const {
  std::set<std::string> out;
  auto it = adjacency_.find(node);
  if (it == adjacency_.end()) return {};
  for (std::size_t idx : it->second) {
    const Edge& e = edges_[idx];
    out.insert(e.head == node ? e.tail : e.head);
  }
  out.erase(node);  // self-loops add no neighbor
  return {out.begin(), out.end()};
}

void Emg::rebuild_adjacency() {
  adjacency_.clear();
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    adjacency_[edges_[i].head].push_back(i);
    if (edges_[i].tail != edges_[i].head) adjacency_[edges_[i].tail].push_back(i);
  }
}

void Emg::recompute_centers() {
  centers_.clear();
  std::map<std::string, std::vector<const Vector*>> per_subclass;
  for (const auto& s : taxonomy::all_subclasses()) per_subclass[s] = {};
  // Ascending id order keeps the summation deterministic.
  for (const auto& [id, m] : memories_) {
    if (m.retired) continue;
    const auto& node = nodes_.at(m.attached_node);
    per_subclass[node.subclass].push_back(&m.embedding);
  }
  for (const auto& [subclass, vecs] : per_subclass) {
    centers_[subclass] = mean_of(vecs, kTextDim);
  }
}

std::string Emg::locate_partition(const Vector& query) const {
  std::string best;
  double best_score = 0.0;
  for (const auto& [subclass, center] : centers_) {
    if (center.is_zero()) continue;  // empty partition
    const double s = cosine(query, center);
    if (best.empty() || s > best_score) {
      best = subclass;
      best_score = s;
    }
  }
  if (best.empty()) throw std::runtime_error("all partitions are empty");
  return best;
}

std::string Emg::top1_in_partition(const std::string& subclass, const Vector& query) const {
  std::string best;
  double best_score = 0.0;
  for (const auto& [id, m] : memories_) {
    if (m.retired) continue;
    if (nodes_.at(m.attached_node).subclass != subclass) continue;
    const double s = cosine(query, m.embedding);
    if (best.empty() || s > best_score) {
      best = id;
      best_score = s;
    }
  }
  if (best.empty()) throw std::runtime_error("empty partition: '" + subclass + "'");
  return best;
}

std::string Emg::subclass_for_new_entity(const MemoryRecord& payload,
                                         const TransEModel& transe,
                                         const std::optional<std::string>& located) const {
  if (payload.subclass_hint && taxonomy::is_subclass(*payload.subclass_hint)) {
    return *payload.subclass_hint;
  }
  if (transe.has_entity(payload.triple.tail_entity)) {
    return assign_to_subclass(payload.triple.tail_entity, transe,
                              taxonomy::all_subclasses());
  }
  if (located) return *located;
  return taxonomy::all_subclasses().front();
}

const std::string& Emg::ensure_node(const std::string& name, const std::string& subclass,
                                    std::vector<std::string>* created) {
  auto it = nodes_.find(name);
  if (it == nodes_.end()) {
    nodes_[name] = {name, subclass, embed_text(name)};
    if (created) created->push_back(name);
    return nodes_.at(name).name;
  }
  return it->second.name;
}

EditOutcome Emg::apply_edit(const EditCommand& cmd, const TransEModel& transe) {
  const MemoryRecord& payload = cmd.payload;
  const auto violations = validate_record(payload);
  if (!violations.empty()) {
    throw std::runtime_error("invalid edit payload '" + payload.id +
                             "': " + violations.front());
  }
  if (cmd.kind == EditKind::Deletion && !payload.valid_until) {
    throw std::runtime_error("deletion payload '" + payload.id +
                             "' carries no valid_until");
  }

  EditOutcome outcome;
  outcome.kind_applied = cmd.kind;

  const Vector payload_vec = embed_text(payload.text);
  std::optional<std::string> located;
  std::optional<std::string> matched;
  if (live_memory_count() > 0) {
    located = locate_partition(payload_vec);
    matched = top1_in_partition(*located, payload_vec);
    outcome.matched_memory_id = matched;
  }

  const std::string payload_rel = normalize_relation(payload.triple.relation);

  if (cmd.kind == EditKind::Insertion || cmd.kind == EditKind::Deletion) {
    const StoredMemory* hit = matched ? find_memory(*matched) : nullptr;
    if (hit && normalize_relation(hit->record.triple.relation) == payload_rel) {
      // Same relation as the retrieved memory: attach alongside it on the
      // existing edge instead of growing the graph.
      add_memory(payload, hit->attached_node);
    } else {
      const std::string subclass = subclass_for_new_entity(payload, transe, located);
      ensure_node(payload.triple.head_entity, subclass, &outcome.nodes_created);
      ensure_node(payload.triple.tail_entity, subclass, &outcome.nodes_created);
      Edge edge{payload.triple.head_entity, payload.triple.relation,
                payload.triple.tail_entity};
      if (std::find(edges_.begin(), edges_.end(), edge) == edges_.end()) {
        edges_.push_back(edge);
      }
      add_memory(payload, payload.triple.tail_entity);
      rebuild_adjacency();
    }
    recompute_centers();
    return outcome;
  }

  // Replacement: the relation must already exist on an edge from the same head.
  const std::string payload_head = normalize_relation(payload.triple.head_entity);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (normalize_relation(edges_[i].head) == payload_head &&
        normalize_relation(edges_[i].relation) == payload_rel) {
      candidates.push_back(i);
    }
  }
  if (candidates.empty()) {
    throw std::runtime_error("no existing relation to replace: '" +
                             payload.triple.head_entity + "' -[" +
                             payload.triple.relation + "]->");
  }
  // Prefer the edge holding the Top-1 retrieval hit, else the smallest tail.
  std::size_t chosen = candidates.front();
  const StoredMemory* hit = matched ? find_memory(*matched) : nullptr;
  bool chosen_by_hit = false;
  if (hit) {
    for (std::size_t idx : candidates) {
      if (edges_[idx].tail == hit->attached_node &&
          normalize_relation(hit->record.triple.relation) == payload_rel) {
        chosen = idx;
        chosen_by_hit = true;
        break;
      }
    }
  }
  if (!chosen_by_hit) {
    for (std::size_t idx : candidates) {
      if (edges_[idx].tail < edges_[chosen].tail) chosen = idx;
    }
  }

  const std::string old_tail = edges_[chosen].tail;
  // Retire the memories this edge carries.
  auto att = attachments_.find(old_tail);
  if (att != attachments_.end()) {
    for (const auto& id : att->second) {
      StoredMemory& m = memories_.at(id);
      if (m.retired) continue;
      if (normalize_relation(m.record.triple.head_entity) == payload_head &&
          normalize_relation(m.record.triple.relation) == payload_rel) {
        m.retired = true;
        outcome.memories_retired.push_back(id);
      }
    }
  }
  if (!outcome.matched_memory_id && !outcome.memories_retired.empty()) {
    outcome.matched_memory_id = outcome.memories_retired.front();
  }

  std::string new_subclass = nodes_.at(old_tail).subclass;
  if (payload.subclass_hint && taxonomy::is_subclass(*payload.subclass_hint)) {
    new_subclass = *payload.subclass_hint;
  }
  ensure_node(payload.triple.tail_entity, new_subclass, &outcome.nodes_created);
  edges_[chosen].tail = payload.triple.tail_entity;
  add_memory(payload, payload.triple.tail_entity);
  outcome.nodes_updated.push_back(old_tail);
  outcome.nodes_updated.push_back(payload.triple.tail_entity);

  rebuild_adjacency();
  recompute_centers();
  return outcome;
}

int Emg::sweep_expired(std::int64_t now) {
  int retired = 0;
  for (auto& [id, m] : memories_) {
    if (!m.retired && m.record.valid_until && *m.record.valid_until < now) {
      m.retired = true;
      ++retired;
    }
  }
  if (retired > 0) recompute_centers();
  return retired;
}

namespace {
constexpr const char* kFormat = "memrag-emg";
constexpr int kVersion = 1;
}  // namespace

std::string Emg::snapshot() const {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["user_id"] = user_id_;
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [name, node] : nodes_) {
    nodes.push_back({{"name", node.name}, {"subclass", node.subclass}});
  }
  j["entity_nodes"] = std::move(nodes);
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : edges_) {
    edges.push_back({{"head", e.head}, {"relation", e.relation}, {"tail", e.tail}});
  }
  j["edges"] = std::move(edges);
  nlohmann::json mems = nlohmann::json::array();
  for (const auto& [id, m] : memories_) {
    nlohmann::json record = memory_to_json(m.record);
    record["attached_node"] = m.attached_node;
    record["retired"] = m.retired;
    mems.push_back(std::move(record));
  }
  j["memories"] = std::move(mems);
  return j.dump();
}

Emg Emg::restore(const std::string& bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("corrupt graph snapshot: ") + e.what());
  }
  if (j.value("format", "") != kFormat || j.value("version", -1) != kVersion) {
    throw std::runtime_error("unsupported graph snapshot version");
  }
  Emg g;
  try {
    g.user_id_ = j.at("user_id").get<std::string>();
    for (const auto& n : j.at("entity_nodes")) {
      const std::string name = n.at("name").get<std::string>();
      g.nodes_[name] = {name, n.at("subclass").get<std::string>(), embed_text(name)};
    }
    for (const auto& e : j.at("edges")) {
      g.edges_.push_back({e.at("head").get<std::string>(),
                          e.at("relation").get<std::string>(),
                          e.at("tail").get<std::string>()});
    }
    for (const auto& mj : j.at("memories")) {
      MemoryRecord record = memory_from_json(mj);
      const std::string node = mj.at("attached_node").get<std::string>();
      g.add_memory(record, node);
      g.memories_.at(record.id).retired = mj.at("retired").get<bool>();
    }
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("corrupt graph snapshot: ") + e.what());
  }
  g.rebuild_adjacency();
  g.recompute_centers();
  return g;
}

bool Emg::operator==(const Emg& other) const {
  return user_id_ == other.user_id_ && nodes_ == other.nodes_ &&
         edges_ == other.edges_ && memories_ == other.memories_ &&
         attachments_ == other.attachments_ && centers_ == other.centers_;
}

std::vector<std::string> Emg::invariant_violations() const {
  std::vector<std::string> out;
  for (const auto& [name, node] : nodes_) {
    if (!taxonomy::is_subclass(node.subclass)) {
      out.push_back("node '" + name + "' has unknown subclass '" + node.subclass + "'");
    }
    if (node.embedding != embed_text(name)) {
      out.push_back("node '" + name + "' embedding is stale");
    }
  }
  for (const auto& e : edges_) {
    if (!nodes_.count(e.head)) out.push_back("edge head missing: '" + e.head + "'");
    if (!nodes_.count(e.tail)) out.push_back("edge tail missing: '" + e.tail + "'");
  }
  for (const auto& [id, m] : memories_) {
    if (!nodes_.count(m.attached_node)) {
      out.push_back("memory '" + id + "' attached to missing node");
      continue;
    }
    const auto& list = attachments_.at(m.attached_node);
    if (std::find(list.begin(), list.end(), id) == list.end()) {
      out.push_back("memory '" + id + "' absent from its node attachment list");
    }
    const auto violations = validate_record(m.record);
    for (const auto& v : violations) out.push_back("memory '" + id + "': " + v);
  }
  for (const auto& [node, ids] : attachments_) {
    for (const auto& id : ids) {
      if (!memories_.count(id)) {
        out.push_back("attachment list of '" + node + "' references unknown id '" + id + "'");
      }
    }
  }
  // Partition centers must equal the arithmetic mean of live attachments.
  std::map<std::string, std::vector<const Vector*>> per_subclass;
  for (const auto& s : taxonomy::all_subclasses()) per_subclass[s] = {};
  for (const auto& [id, m] : memories_) {
    if (m.retired) continue;
    auto node = nodes_.find(m.attached_node);
    if (node == nodes_.end()) continue;
    per_subclass[node->second.subclass].push_back(&m.embedding);
  }
  for (const auto& [subclass, vecs] : per_subclass) {
    const Vector expected = mean_of(vecs, kTextDim);
    auto it = centers_.find(subclass);
    if (it == centers_.end()) {
      out.push_back("missing partition center for '" + subclass + "'");
      continue;
    }
    for (std::size_t i = 0; i < kTextDim; ++i) {
      if (std::abs(expected.c[i] - it->second.c[i]) > 1e-9) {
        out.push_back("partition center drift in '" + subclass + "'");
        break;
      }
    }
  }
  return out;
}

void save_emg(const Emg& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write graph snapshot: " + path.string());
  out << graph.snapshot();
}

Emg load_emg(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph snapshot: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return Emg::restore(ss.str());
}

}  // namespace memrag
