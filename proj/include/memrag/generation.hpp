#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace memrag {

// Answer generation behind one interface. Implementations must be pure:
// the same (question, memory multiset) always yields the same answer.
class GeneratorInterface {
 public:
  virtual ~GeneratorInterface() = default;
  virtual std::string generate(const std::string& question,
                               const std::vector<std::string>& memories) = 0;
};

inline constexpr const char* kInsufficientAnswer = "Insufficient memory.";

// A reference answer split into literal spans and slots. A slot is covered
// when its source memory text appears in the supplied memory set; rendering
// fills covered slots and elides the rest. With every slot covered the
// rendered answer equals the reference verbatim.
struct AnswerTemplate {
  struct Slot {
    std::string value;        // the answer span this slot contributes
    std::string source_text;  // memory text that must be present to cover it
  };
  struct Part {
    bool is_slot = false;
    std::string literal;  // used when !is_slot
    int slot = -1;        // index into slots when is_slot
  };

  std::vector<Part> parts;
  std::vector<Slot> slots;
  std::vector<int> extract_slots;  // slots whose values form the extracted entity

  std::string render(const std::vector<bool>& covered) const;
  std::string reference() const;  // render with everything covered
};

class MockOracle : public GeneratorInterface {
 public:
  void add_entry(const std::string& question, AnswerTemplate tmpl);
  bool has(const std::string& question) const;
  std::size_t size() const { return entries_.size(); }

  std::string generate(const std::string& question,
                       const std::vector<std::string>& memories) override;

  // Entity extraction for exact-match scoring: the values of the template's
  // extract slots, space-joined, empty when any of them is uncovered.
  std::string extract_entity(const std::string& question,
                             const std::vector<std::string>& memories) const;

  void save(const std::filesystem::path& path) const;
  static MockOracle load(const std::filesystem::path& path);

 private:
  std::vector<bool> coverage(const AnswerTemplate& tmpl,
                             const std::vector<std::string>& memories) const;
  std::map<std::string, AnswerTemplate> entries_;
};

// Memoizes (question id, sorted memory-id set) -> (answer, metric value).
// Reads may run concurrently; writes are serialized.
class AnswerCache {
 public:
  struct Entry {
    std::string answer;
    double metric = 0.0;
  };

  std::optional<Entry> get(const std::string& question_id,
                           std::vector<std::string> memory_ids) const;
  void put(const std::string& question_id, std::vector<std::string> memory_ids,
           Entry entry);
  std::size_t size() const;
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

  void save(const std::filesystem::path& path) const;
  static AnswerCache load(const std::filesystem::path& path);

 private:
  static std::string make_key(const std::string& question_id,
                              std::vector<std::string> memory_ids);
  mutable std::shared_mutex mutex_;
  mutable std::size_t hits_ = 0;
  mutable std::size_t misses_ = 0;
  std::map<std::string, Entry> entries_;
};

// Chat-completions-style HTTP generator. Failures surface as exceptions
// carrying the attempt count, never as empty answers.
struct RemoteConfig {
  std::string endpoint;  // e.g. "http://localhost:8089"
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key;
  int timeout_seconds = 30;
  int max_retries = 2;
  // {question} and {memories} are substituted; memories are numbered lines.
  std::string prompt_template =
      "Answer the question using only the numbered memories.\n"
      "Question: {question}\nMemories:\n{memories}";
};

RemoteConfig remote_config_from_env();

class RemoteGenerator : public GeneratorInterface {
 public:
  explicit RemoteGenerator(RemoteConfig config);
  std::string generate(const std::string& question,
                       const std::vector<std::string>& memories) override;
  std::string build_prompt(const std::string& question,
                           const std::vector<std::string>& memories) const;

 private:
  RemoteConfig config_;
};

}  // namespace memrag
