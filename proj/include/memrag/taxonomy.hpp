#pragma once

#include <string>
#include <vector>

namespace memrag::taxonomy {

// The four fixed memory types and their business subclasses. The taxonomy
// is static; graphs only decide which subclass an entity belongs to.
const std::vector<std::string>& types();
const std::vector<std::string>& subclasses_of(const std::string& type);
const std::vector<std::string>& all_subclasses();
const std::string& type_of(const std::string& subclass);  // throws on unknown
bool is_subclass(const std::string& name);

}  // namespace memrag::taxonomy
