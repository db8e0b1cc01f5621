#pragma once

// Portable deterministic randomness. std::mt19937_64 is fully specified by
// the standard; the real-valued conversions below avoid the
// implementation-defined std::uniform_real_distribution.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace snnas {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6A09E667F3BCC908ull;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Uniform float in [0, 1) with 24 random bits.
inline float uniform01f(std::mt19937_64& gen) {
  return static_cast<float>(gen() >> 40) * 0x1.0p-24f;
}

}  // namespace snnas
