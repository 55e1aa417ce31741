#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace memrag {

struct Triple {
  std::string head_entity;
  std::string relation;
  std::string tail_entity;

  bool operator==(const Triple&) const = default;
};

// One stored fact about a user. Immutable after validation; timestamps are
// UTC epoch seconds in memory and ISO-8601 strings on disk.
struct MemoryRecord {
  std::string id;
  std::string text;
  Triple triple;
  std::int64_t created_at = 0;
  std::optional<std::string> location;
  std::optional<std::int64_t> valid_until;  // absent = permanent
  std::optional<std::string> subclass_hint;

  bool operator==(const MemoryRecord&) const = default;
};

struct QAPair {
  std::string question;
  std::string answer;
  std::vector<std::string> required_memory_ids;  // nonempty, ordered, unique
  std::string q_entity;
  std::string q_relation;

  bool operator==(const QAPair&) const = default;
};

enum class EditKind { Insertion, Deletion, Replacement };

std::string to_string(EditKind kind);
EditKind edit_kind_from_string(const std::string& s);

struct EditCommand {
  EditKind kind = EditKind::Insertion;
  MemoryRecord payload;
  std::int64_t effective_at = 0;

  bool operator==(const EditCommand&) const = default;
};

struct Session {
  std::string user_id;
  std::vector<MemoryRecord> memories;  // sorted by (created_at, id)
  std::vector<QAPair> qa_pairs;

  bool operator==(const Session&) const = default;
};

// Returns every invariant violation; empty means valid.
std::vector<std::string> validate_record(const MemoryRecord& record);

// JSON Lines corpus, one tagged record per line:
//   {"type":"memory","user_id":...,"id":...,"text":...,"triple":{...},...}
//   {"type":"qa","user_id":...,"question":...,"answer":...,...}
// Sessions come back grouped by user_id (first-appearance order) with
// memories sorted chronologically, ties broken by id.
std::vector<Session> load_corpus(const std::filesystem::path& path);
std::vector<Session> parse_corpus(std::istream& in, const std::string& source_name);

std::string serialize_corpus(const std::vector<Session>& sessions);
void save_corpus(const std::vector<Session>& sessions, const std::filesystem::path& path);

nlohmann::json memory_to_json(const MemoryRecord& record);
MemoryRecord memory_from_json(const nlohmann::json& j);
nlohmann::json qa_to_json(const QAPair& qa);
QAPair qa_from_json(const nlohmann::json& j);
nlohmann::json edit_to_json(const EditCommand& cmd);
EditCommand edit_from_json(const nlohmann::json& j);

// One line of an edit stream file; `week` groups edits for the
// continuous-edit experiment (0 when unused).
struct EditStreamEntry {
  std::string user_id;
  int week = 0;
  EditCommand cmd;

  bool operator==(const EditStreamEntry&) const = default;
};

std::vector<EditStreamEntry> load_edit_stream(const std::filesystem::path& path);
std::string serialize_edit_stream(const std::vector<EditStreamEntry>& entries);
void save_edit_stream(const std::vector<EditStreamEntry>& entries,
                      const std::filesystem::path& path);

}  // namespace memrag
