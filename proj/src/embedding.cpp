#include "memrag/embedding.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "memrag/util.hpp"

namespace memrag {

double Vector::norm() const {
  double s = 0.0;
  for (double x : c) s += x * x;
  return std::sqrt(s);
}

bool Vector::is_zero() const {
  for (double x : c) {
    if (x != 0.0) return false;
  }
  return true;
}

void Vector::l2_normalize() {
  const double n = norm();
  if (n == 0.0) return;
  for (double& x : c) x /= n;
}

double dot(const Vector& u, const Vector& v) {
  if (u.dim() != v.dim()) {
    throw std::invalid_argument("vector dimension mismatch: " +
                                std::to_string(u.dim()) + " vs " +
                                std::to_string(v.dim()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) s += u.c[i] * v.c[i];
  return s;
}

double cosine(const Vector& u, const Vector& v) {
  const double d = dot(u, v);
  double nu = 0.0, nv = 0.0;
  for (double x : u.c) nu += x * x;
  for (double x : v.c) nv += x * x;
  if (nu == 0.0 || nv == 0.0) return 0.0;
  // Equality of d*d and nu*nv holds exactly for bitwise-equal inputs and
  // yields an exact +/-1 instead of a value one ulp off.
  if (d * d == nu * nv) return d >= 0.0 ? 1.0 : -1.0;
  const double r = d / std::sqrt(nu * nv);
  if (r > 1.0) return 1.0;
  if (r < -1.0) return -1.0;
  return r;
}

Vector mean_of(const std::vector<const Vector*>& vs, std::size_t dim) {
  Vector out(dim);
  if (vs.empty()) return out;
  for (const Vector* v : vs) {
    if (v->dim() != dim) throw std::invalid_argument("mean_of: dimension mismatch");
    for (std::size_t i = 0; i < dim; ++i) out.c[i] += v->c[i];
  }
  for (std::size_t i = 0; i < dim; ++i) out.c[i] /= static_cast<double>(vs.size());
  return out;
}

namespace {

constexpr double kTrigramWeight = 0.5;

void add_feature(Vector& v, std::string_view key, double weight) {
  const std::uint64_t h = fnv1a64(key);
  const std::size_t bucket = static_cast<std::size_t>(h % v.dim());
  const double sign = (h >> 63) ? -1.0 : 1.0;
  v.c[bucket] += sign * weight;
}

}  // namespace

Vector embed_text(std::string_view text, std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("embed_text: dim must be positive");
  Vector v(dim);
  const std::vector<std::string> words = tokenize_words(text);
  if (words.empty()) return v;  // zero vector for empty / punctuation-only text

  std::string joined;
  for (const auto& w : words) {
    add_feature(v, "w\x1f" + w, 1.0);
    if (!joined.empty()) joined.push_back(' ');
    joined += w;
  }
  if (joined.size() >= 3) {
    for (std::size_t i = 0; i + 3 <= joined.size(); ++i) {
      add_feature(v, std::string("c\x1f") + std::string(joined.substr(i, 3)),
                  kTrigramWeight);
    }
  }
  v.l2_normalize();
  return v;
}

}  // namespace memrag
