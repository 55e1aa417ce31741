#include "memrag/taxonomy.hpp"

#include <map>
#include <stdexcept>

namespace memrag::taxonomy {

namespace {

const std::vector<std::string> kTypes = {"Relationship", "Preference", "Event",
                                         "Attribute"};

const std::map<std::string, std::vector<std::string>> kSubclasses = {
    {"Relationship",
     {"Spouse", "Parents/Children", "Relatives", "Colleague/Friends",
      "Teacher/Student"}},
    {"Preference",
     {"Diet preference", "Cultural preference", "Car preference",
      "Sports preference", "Gaming preference",
      "Audio-visual entertainment preference"}},
    {"Event", {"Life events", "Arrangement", "Anniversary"}},
    {"Attribute",
     {"Name/Nickname", "Birthday/Age", "Gender", "Education",
      "Personal belongings/Pets", "Address", "Occupation"}},
};

std::vector<std::string> make_all() {
  std::vector<std::string> all;
  for (const auto& t : kTypes) {
    const auto& subs = kSubclasses.at(t);
    all.insert(all.end(), subs.begin(), subs.end());
  }
  return all;
}

std::map<std::string, std::string> make_owner() {
  std::map<std::string, std::string> owner;
  for (const auto& [type, subs] : kSubclasses) {
    for (const auto& s : subs) owner[s] = type;
  }
  return owner;
}

}  // namespace

const std::vector<std::string>& types() { return kTypes; }

const std::vector<std::string>& subclasses_of(const std::string& type) {
  auto it = kSubclasses.find(type);
  if (it == kSubclasses.end()) throw std::runtime_error("unknown memory type: '" + type + "'");
  return it->second;
}

const std::vector<std::string>& all_subclasses() {
  static const std::vector<std::string> all = make_all();
  return all;
}

const std::string& type_of(const std::string& subclass) {
  static const std::map<std::string, std::string> owner = make_owner();
  auto it = owner.find(subclass);
  if (it == owner.end()) throw std::runtime_error("unknown subclass: '" + subclass + "'");
  return it->second;
}

bool is_subclass(const std::string& name) {
  static const std::map<std::string, std::string> owner = make_owner();
  return owner.count(name) > 0;
}

}  // namespace memrag::taxonomy
