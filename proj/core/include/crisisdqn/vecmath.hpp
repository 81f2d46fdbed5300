#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace crisisdqn {

// Accumulates in double regardless of the element type.
double dot(std::span<const float> a, std::span<const float> b);
double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const float> a);
double l2_norm(std::span<const double> a);

// Cosine similarity, clamped to [-1, 1]. Returns 0 when either side has zero norm.
double cosine(std::span<const float> a, std::span<const float> b);
double cosine(std::span<const double> a, std::span<const double> b);

// FNV-1a, 64 bit. Used for config/corpus fingerprints in manifests and checkpoints.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string_view hex64(std::uint64_t value, char (&buf)[17]);

}  // namespace crisisdqn
