#include "memrag/generation.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "memrag/util.hpp"

namespace memrag {

namespace {

// Drop spaces left dangling by elided slots: collapse runs, trim, and pull
// trailing punctuation back onto the last word.
std::string tidy(const std::string& s) {
  std::string collapsed = collapse_spaces(trim(s));
  std::string out;
  out.reserve(collapsed.size());
  for (char c : collapsed) {
    if ((c == '.' || c == ',' || c == '!' || c == '?') && !out.empty() &&
        out.back() == ' ') {
      out.pop_back();
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string AnswerTemplate::render(const std::vector<bool>& covered) const {
  bool any = false;
  for (bool b : covered) any = any || b;
  if (!any) return kInsufficientAnswer;
  std::string out;
  for (const auto& part : parts) {
    if (!part.is_slot) {
      out += part.literal;
    } else if (covered.at(part.slot)) {
      out += slots.at(part.slot).value;
    }
  }
  return tidy(out);
}

std::string AnswerTemplate::reference() const {
  return render(std::vector<bool>(slots.size(), true));
}

void MockOracle::add_entry(const std::string& question, AnswerTemplate tmpl) {
  entries_[question] = std::move(tmpl);
}

bool MockOracle::has(const std::string& question) const {
  return entries_.count(question) > 0;
}

std::vector<bool> MockOracle::coverage(const AnswerTemplate& tmpl,
                                       const std::vector<std::string>& memories) const {
  const std::set<std::string> present(memories.begin(), memories.end());
  std::vector<bool> covered(tmpl.slots.size(), false);
  for (std::size_t i = 0; i < tmpl.slots.size(); ++i) {
    covered[i] = present.count(tmpl.slots[i].source_text) > 0;
  }
  return covered;
}

std::string MockOracle::generate(const std::string& question,
                                 const std::vector<std::string>& memories) {
  auto it = entries_.find(question);
  if (it == entries_.end()) return kInsufficientAnswer;
  return it->second.render(coverage(it->second, memories));
}

std::string MockOracle::extract_entity(const std::string& question,
                                       const std::vector<std::string>& memories) const {
  auto it = entries_.find(question);
  if (it == entries_.end()) return "";
  const auto covered = coverage(it->second, memories);
  std::string out;
  for (int slot : it->second.extract_slots) {
    if (!covered.at(slot)) return "";
    if (!out.empty()) out += " ";
    out += it->second.slots.at(slot).value;
  }
  return out;
}

void MockOracle::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write oracle file: " + path.string());
  for (const auto& [question, tmpl] : entries_) {
    nlohmann::json j;
    j["question"] = question;
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& p : tmpl.parts) {
      if (p.is_slot) {
        parts.push_back({{"slot", p.slot}});
      } else {
        parts.push_back({{"literal", p.literal}});
      }
    }
    j["parts"] = std::move(parts);
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& s : tmpl.slots) {
      slots.push_back({{"value", s.value}, {"source_text", s.source_text}});
    }
    j["slots"] = std::move(slots);
    j["extract_slots"] = tmpl.extract_slots;
    out << j.dump() << '\n';
  }
}

MockOracle MockOracle::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open oracle file: " + path.string());
  MockOracle oracle;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      AnswerTemplate tmpl;
      for (const auto& p : j.at("parts")) {
        AnswerTemplate::Part part;
        if (p.contains("slot")) {
          part.is_slot = true;
          part.slot = p.at("slot").get<int>();
        } else {
          part.literal = p.at("literal").get<std::string>();
        }
        tmpl.parts.push_back(std::move(part));
      }
      for (const auto& s : j.at("slots")) {
        tmpl.slots.push_back({s.at("value").get<std::string>(),
                              s.at("source_text").get<std::string>()});
      }
      tmpl.extract_slots = j.value("extract_slots", std::vector<int>{});
      oracle.add_entry(j.at("question").get<std::string>(), std::move(tmpl));
    } catch (const std::exception& e) {
      throw std::runtime_error("oracle parse error at " + path.filename().string() +
                               ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return oracle;
}

std::string AnswerCache::make_key(const std::string& question_id,
                                  std::vector<std::string> memory_ids) {
  std::sort(memory_ids.begin(), memory_ids.end());
  std::string key = question_id;
  for (const auto& id : memory_ids) {
    key += '\x1f';
    key += id;
  }
  return key;
}

std::optional<AnswerCache::Entry> AnswerCache::get(
    const std::string& question_id, std::vector<std::string> memory_ids) const {
  const std::string key = make_key(question_id, std::move(memory_ids));
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second;
}

void AnswerCache::put(const std::string& question_id,
                      std::vector<std::string> memory_ids, Entry entry) {
  const std::string key = make_key(question_id, std::move(memory_ids));
  std::unique_lock lock(mutex_);
  entries_[key] = std::move(entry);
}

std::size_t AnswerCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void AnswerCache::save(const std::filesystem::path& path) const {
  std::shared_lock lock(mutex_);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write cache file: " + path.string());
  for (const auto& [key, entry] : entries_) {
    nlohmann::json j;
    j["key"] = key;
    j["answer"] = entry.answer;
    j["metric"] = entry.metric;
    out << j.dump() << '\n';
  }
}

AnswerCache AnswerCache::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cache file: " + path.string());
  AnswerCache cache;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    cache.entries_[j.at("key").get<std::string>()] = {
        j.at("answer").get<std::string>(), j.at("metric").get<double>()};
  }
  return cache;
}

RemoteConfig remote_config_from_env() {
  RemoteConfig config;
  if (const char* url = std::getenv("MEMRAG_GENERATOR_URL")) config.endpoint = url;
  if (const char* model = std::getenv("MEMRAG_GENERATOR_MODEL")) config.model = model;
  if (const char* key = std::getenv("MEMRAG_GENERATOR_KEY")) config.api_key = key;
  return config;
}

RemoteGenerator::RemoteGenerator(RemoteConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) {
    throw std::runtime_error("remote generator endpoint not configured");
  }
}

std::string RemoteGenerator::build_prompt(const std::string& question,
                                          const std::vector<std::string>& memories) const {
  std::string numbered;
  for (std::size_t i = 0; i < memories.size(); ++i) {
    numbered += std::to_string(i + 1) + ". " + memories[i] + "\n";
  }
  if (memories.empty()) numbered = "(none)\n";
  std::string prompt = config_.prompt_template;
  auto replace_all = [](std::string& s, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
      s.replace(pos, from.size(), to);
      pos += to.size();
    }
  };
  replace_all(prompt, "{question}", question);
  replace_all(prompt, "{memories}", numbered);
  return prompt;
}

}  // namespace memrag
