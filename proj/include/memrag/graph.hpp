#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "memrag/embedding.hpp"
#include "memrag/memory.hpp"
#include "memrag/transe.hpp"

namespace memrag {

struct EntityNode {
  std::string name;
  std::string subclass;
  Vector embedding;  // text embedding of the name

  bool operator==(const EntityNode&) const = default;
};

struct Edge {
  std::string head;
  std::string relation;
  std::string tail;

  bool operator==(const Edge&) const = default;
};

struct StoredMemory {
  MemoryRecord record;
  Vector embedding;  // text embedding of record.text
  std::string attached_node;
  bool retired = false;

  bool operator==(const StoredMemory&) const = default;
};

struct EditOutcome {
  EditKind kind_applied = EditKind::Insertion;
  std::optional<std::string> matched_memory_id;  // Top-1 retrieval hit
  std::vector<std::string> nodes_created;
  std::vector<std::string> nodes_updated;
  std::vector<std::string> memories_retired;
};

// Training triples for a session's graph: the memory triples plus one
// (tail, "instance-of", subclass_hint) triple per hinted memory so that
// subclass names live in the same embedding space as entities.
std::vector<Triple> training_triples(const Session& session);

inline constexpr const char* kInstanceOfRelation = "instance-of";

// The three-layer editable memory graph of one user: a fixed type/subclass
// tree over an entity graph, with each memory attached at the in-degree
// (tail) node of the edge its triple created.
class Emg {
 public:
  Emg() = default;

  static Emg build(const Session& session, const TransEModel& transe);

  const std::string& user_id() const { return user_id_; }
  const std::map<std::string, EntityNode>& entity_nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::map<std::string, std::vector<std::string>>& attachments() const {
    return attachments_;
  }
  const std::map<std::string, Vector>& partition_centers() const { return centers_; }

  const StoredMemory* find_memory(const std::string& id) const;
  std::size_t memory_count() const { return memories_.size(); }
  std::size_t live_memory_count() const;
  // Live memory ids in ascending order.
  std::vector<std::string> live_memory_ids() const;
  // Live memory ids attached at one node, ascending.
  std::vector<std::string> live_attachments(const std::string& node) const;
  // Other endpoints of all edges incident to a node, ascending, unique.
  std::vector<std::string> neighbors(const std::string& node) const;

  // Subclass whose partition center is most cosine-similar to the query;
  // lexicographic tie-break; throws when every partition is empty.
  std::string locate_partition(const Vector& query) const;

  // Highest-cosine live memory within a subclass; id tie-break; throws on
  // an empty partition.
  std::string top1_in_partition(const std::string& subclass, const Vector& query) const;

  EditOutcome apply_edit(const EditCommand& cmd, const TransEModel& transe);

  // Retires every live memory with valid_until < now. Idempotent.
  int sweep_expired(std::int64_t now);

  // Versioned JSON snapshot; restore(snapshot(g)) equals g structurally,
  // retired bookkeeping included.
  std::string snapshot() const;
  static Emg restore(const std::string& bytes);

  // Structural invariant check; empty result means healthy.
  std::vector<std::string> invariant_violations() const;

  bool operator==(const Emg& other) const;

 private:
  void add_memory(const MemoryRecord& record, const std::string& node);
  const std::string& ensure_node(const std::string& name, const std::string& subclass,
                                 std::vector<std::string>* created);
  std::string subclass_for_new_entity(const MemoryRecord& payload,
                                      const TransEModel& transe,
                                      const std::optional<std::string>& located) const;
  void rebuild_adjacency();
  void recompute_centers();

  std::string user_id_;
  std::map<std::string, EntityNode> nodes_;
  std::vector<Edge> edges_;
  std::map<std::string, StoredMemory> memories_;
  std::map<std::string, std::vector<std::string>> attachments_;  // node -> ids
  std::map<std::string, Vector> centers_;                        // subclass -> mean
  std::map<std::string, std::vector<std::size_t>> adjacency_;    // node -> edge idx
};

void save_emg(const Emg& graph, const std::filesystem::path& path);
Emg load_emg(const std::filesystem::path& path);

}  // namespace memrag
