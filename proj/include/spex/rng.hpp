#pragma once

#include <cmath>
#include <cstdint>

namespace spex {

// SplitMix64: counter-based 64-bit generator (output is a bijective hash
// of seed + n*gamma). Streams derived from distinct keys are independent
// for practical purposes, which makes per-(seed, year, day) substreams
// order-independent under parallel generation.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0,1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1]; safe to pass through log().
  double uniform01_open0() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform01_open0()); }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2)));
}

// Substream key for one simulated field.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t year,
                                std::uint64_t day) {
  return hash_combine(hash_combine(mix64(seed), year + 1), day + 1);
}

}  // namespace spex
