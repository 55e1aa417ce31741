#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace memrag {

inline constexpr const char* kCodeVersion = "0.1.0";

// 64-bit FNV-1a. Used wherever a hash must be stable across builds and
// platforms (std::hash is implementation-defined).
std::uint64_t fnv1a64(std::string_view data);

std::uint64_t splitmix64(std::uint64_t x);

// Strict "YYYY-MM-DDTHH:MM:SSZ" <-> UTC epoch seconds.
std::int64_t parse_iso8601_utc(const std::string& s);
std::string format_iso8601_utc(std::int64_t epoch_seconds);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::string collapse_spaces(std::string_view s);

// Relation labels compare by lowercase+trimmed form.
std::string normalize_relation(std::string_view s);

// Lowercase runs of alphanumeric characters.
std::vector<std::string> tokenize_words(std::string_view s);

// mt19937_64 with hand-rolled draws; std distributions are
// implementation-defined and would break seeded reproducibility
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace memrag
