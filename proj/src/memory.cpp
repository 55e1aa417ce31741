#include "memrag/memory.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "memrag/util.hpp"

namespace memrag {

std::string to_string(EditKind kind) {
  switch (kind) {
    case EditKind::Insertion: return "Insertion";
    case EditKind::Deletion: return "Deletion";
    case EditKind::Replacement: return "Replacement";
  }
  throw std::logic_error("unknown EditKind");
}

EditKind edit_kind_from_string(const std::string& s) {
  if (s == "Insertion") return EditKind::Insertion;
  if (s == "Deletion") return EditKind::Deletion;
  if (s == "Replacement") return EditKind::Replacement;
  throw std::runtime_error("unknown edit kind: '" + s + "'");
}

std::vector<std::string> validate_record(const MemoryRecord& record) {
  std::vector<std::string> violations;
  if (record.id.empty()) violations.push_back("id empty");
  if (record.triple.head_entity.empty()) violations.push_back("head_entity empty");
  if (record.triple.relation.empty()) violations.push_back("relation empty");
  if (record.triple.tail_entity.empty()) violations.push_back("tail_entity empty");
  if (record.valid_until && *record.valid_until < record.created_at) {
    violations.push_back("expiry precedes creation");
  }
  return violations;
}

nlohmann::json memory_to_json(const MemoryRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["text"] = r.text;
  j["triple"] = {{"head_entity", r.triple.head_entity},
                 {"relation", r.triple.relation},
                 {"tail_entity", r.triple.tail_entity}};
  j["created_at"] = format_iso8601_utc(r.created_at);
  if (r.location) j["location"] = *r.location;
  if (r.valid_until) j["valid_until"] = format_iso8601_utc(*r.valid_until);
  if (r.subclass_hint) j["subclass_hint"] = *r.subclass_hint;
  return j;
}

MemoryRecord memory_from_json(const nlohmann::json& j) {
  MemoryRecord r;
  r.id = j.at("id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  const auto& t = j.at("triple");
  r.triple.head_entity = t.at("head_entity").get<std::string>();
  r.triple.relation = t.at("relation").get<std::string>();
  r.triple.tail_entity = t.at("tail_entity").get<std::string>();
  r.created_at = parse_iso8601_utc(j.at("created_at").get<std::string>());
  if (j.contains("location")) r.location = j.at("location").get<std::string>();
  if (j.contains("valid_until")) {
    r.valid_until = parse_iso8601_utc(j.at("valid_until").get<std::string>());
  }
  if (j.contains("subclass_hint")) {
    r.subclass_hint = j.at("subclass_hint").get<std::string>();
  }
  return r;
}

nlohmann::json qa_to_json(const QAPair& qa) {
  nlohmann::json j;
  j["question"] = qa.question;
  j["answer"] = qa.answer;
  j["required_memory_ids"] = qa.required_memory_ids;
  j["q_entity"] = qa.q_entity;
  j["q_relation"] = qa.q_relation;
  return j;
}

QAPair qa_from_json(const nlohmann::json& j) {
  QAPair qa;
  qa.question = j.at("question").get<std::string>();
  qa.answer = j.at("answer").get<std::string>();
  qa.required_memory_ids = j.at("required_memory_ids").get<std::vector<std::string>>();
  qa.q_entity = j.value("q_entity", "");
  qa.q_relation = j.value("q_relation", "");
  return qa;
}

nlohmann::json edit_to_json(const EditCommand& cmd) {
  nlohmann::json j;
  j["kind"] = to_string(cmd.kind);
  j["payload"] = memory_to_json(cmd.payload);
  j["effective_at"] = format_iso8601_utc(cmd.effective_at);
  return j;
}

EditCommand edit_from_json(const nlohmann::json& j) {
  EditCommand cmd;
  cmd.kind = edit_kind_from_string(j.at("kind").get<std::string>());
  cmd.payload = memory_from_json(j.at("payload"));
  cmd.effective_at = parse_iso8601_utc(j.at("effective_at").get<std::string>());
  return cmd;
}

namespace {

struct PendingQA {
  std::string user_id;
  QAPair qa;
};

void sort_memories(std::vector<MemoryRecord>& memories) {
  std::sort(memories.begin(), memories.end(),
            [](const MemoryRecord& a, const MemoryRecord& b) {
              if (a.created_at != b.created_at) return a.created_at < b.created_at;
              return a.id < b.id;
            });
}

}  // namespace

std::vector<Session> parse_corpus(std::istream& in, const std::string& source_name) {
  std::vector<std::string> user_order;
  std::map<std::string, Session> by_user;
  std::vector<PendingQA> pending_qa;
  std::set<std::string> seen_ids;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    std::string type;
    std::string user_id;
    try {
      j = nlohmann::json::parse(line);
      type = j.at("type").get<std::string>();
      user_id = j.at("user_id").get<std::string>();
      if (!by_user.count(user_id)) {
        user_order.push_back(user_id);
        by_user[user_id].user_id = user_id;
      }
      if (type == "memory") {
        MemoryRecord r = memory_from_json(j);
        auto violations = validate_record(r);
        if (!violations.empty()) {
          throw std::runtime_error("invalid memory '" + r.id + "': " + violations.front());
        }
        if (!seen_ids.insert(r.id).second) {
          throw std::runtime_error("duplicate memory id '" + r.id + "'");
        }
        by_user[user_id].memories.push_back(std::move(r));
      } else if (type == "qa") {
        QAPair qa = qa_from_json(j);
        if (qa.required_memory_ids.empty()) {
          throw std::runtime_error("qa with empty required_memory_ids");
        }
        pending_qa.push_back({user_id, std::move(qa)});
      } else {
        throw std::runtime_error("unknown record type '" + type + "'");
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("corpus parse error at " + source_name + ":" +
                               std::to_string(line_no) + ": " + e.what());
    }
  }

  // Required ids must resolve after the whole file is read; QA lines may
  // precede the memories they reference.
  for (auto& p : pending_qa) {
    for (const auto& id : p.qa.required_memory_ids) {
      if (!seen_ids.count(id)) {
        throw std::runtime_error("corpus integrity error in " + source_name +
                                 ": unknown required memory id '" + id + "'");
      }
    }
    by_user[p.user_id].qa_pairs.push_back(std::move(p.qa));
  }

  std::vector<Session> sessions;
  sessions.reserve(user_order.size());
  for (const auto& user : user_order) {
    Session s = std::move(by_user[user]);
    sort_memories(s.memories);
    sessions.push_back(std::move(s));
  }
  return sessions;
}

std::vector<Session> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path.string());
  return parse_corpus(in, path.filename().string());
}

std::string serialize_corpus(const std::vector<Session>& sessions) {
  std::ostringstream out;
  for (const auto& s : sessions) {
    for (const auto& m : s.memories) {
      nlohmann::json j = memory_to_json(m);
      j["type"] = "memory";
      j["user_id"] = s.user_id;
      out << j.dump() << '\n';
    }
    for (const auto& qa : s.qa_pairs) {
      nlohmann::json j = qa_to_json(qa);
      j["type"] = "qa";
      j["user_id"] = s.user_id;
      out << j.dump() << '\n';
    }
  }
  return out.str();
}

void save_corpus(const std::vector<Session>& sessions, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path.string());
  out << serialize_corpus(sessions);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<EditStreamEntry> load_edit_stream(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edit stream: " + path.string());
  std::vector<EditStreamEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      EditStreamEntry e;
      e.user_id = j.at("user_id").get<std::string>();
      e.week = j.value("week", 0);
      e.cmd = edit_from_json(j);
      entries.push_back(std::move(e));
    } catch (const std::exception& e) {
      throw std::runtime_error("edit stream parse error at " +
                               path.filename().string() + ":" +
                               std::to_string(line_no) + ": " + e.what());
    }
  }
  return entries;
}

std::string serialize_edit_stream(const std::vector<EditStreamEntry>& entries) {
  std::ostringstream out;
  for (const auto& e : entries) {
    nlohmann::json j = edit_to_json(e.cmd);
    j["user_id"] = e.user_id;
    j["week"] = e.week;
    out << j.dump() << '\n';
  }
  return out.str();
}

void save_edit_stream(const std::vector<EditStreamEntry>& entries,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write edit stream: " + path.string());
  out << serialize_edit_stream(entries);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace memrag
