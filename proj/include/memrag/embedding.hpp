#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace memrag {

inline constexpr std::size_t kTextDim = 128;
inline constexpr std::size_t kTransEDim = 32;

struct Vector {
  std::vector<double> c;

  Vector() = default;
  explicit Vector(std::size_t dim) : c(dim, 0.0) {}
  explicit Vector(std::vector<double> values) : c(std::move(values)) {}

  std::size_t dim() const { return c.size(); }
  double norm() const;
  bool is_zero() const;
  void l2_normalize();  // no-op on the zero vector

  bool operator==(const Vector&) const = default;
};

double dot(const Vector& u, const Vector& v);  // throws on dim mismatch

// dot/(|u||v|), clamped to [-1, 1]; 0 if either norm is 0. Bitwise-equal
// inputs return exactly 1.0.
double cosine(const Vector& u, const Vector& v);

Vector mean_of(const std::vector<const Vector*>& vs, std::size_t dim);

// Deterministic text embedding: signed feature hashing of lowercase word
// unigrams plus character trigrams, L2-normalized. Empty text gives the
// zero vector. Identical text gives bitwise-identical vectors.
Vector embed_text(std::string_view text, std::size_t dim = kTextDim);

}  // namespace memrag
