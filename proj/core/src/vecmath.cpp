#include "crisisdqn/vecmath.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace crisisdqn {

namespace {

template <typename T>
double dot_impl(std::span<const T> a, std::span<const T> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  const double na2 = dot_impl(a, a);
  const double nb2 = dot_impl(b, b);
  if (na2 == 0.0 || nb2 == 0.0) return 0.0;
  // sqrt(fl(x * x)) == x, so identical inputs give exactly 1.
  return std::clamp(dot_impl(a, b) / std::sqrt(na2 * nb2), -1.0, 1.0);
}

}  // namespace

double dot(std::span<const float> a, std::span<const float> b) { return dot_impl(a, b); }
double dot(std::span<const double> a, std::span<const double> b) { return dot_impl(a, b); }
double l2_norm(std::span<const float> a) { return std::sqrt(dot_impl(a, a)); }
double l2_norm(std::span<const double> a) { return std::sqrt(dot_impl(a, a)); }
double cosine(std::span<const float> a, std::span<const float> b) { return cosine_impl(a, b); }
double cosine(std::span<const double> a, std::span<const double> b) { return cosine_impl(a, b); }

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string_view hex64(std::uint64_t value, char (&buf)[17]) {
  static constexpr char kDigits[] = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = kDigits[value & 0xF];
    value >>= 4;
  }
  buf[16] = '\0';
  return {buf, 16};
}

}  // namespace crisisdqn
