#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "promptseg/text.hpp"

namespace promptseg {

/// Seeded generator with a portable bounded-integer draw (std distributions differ across libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent substream keyed by (seed, trial, sample id).
  static Rng substream(std::uint64_t seed, std::uint64_t trial, std::string_view sample_id) {
    std::uint64_t s = mix(seed);
    s = mix(s ^ (trial + 0x9e3779b97f4a7c15ULL));
    s = mix(s ^ fnv1a(sample_id));
    return Rng(s);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [lo, hi], by rejection on the 64-bit stream.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % span + 1) % span;
    std::uint64_t x;
    do x = engine_();
    while (x > limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  /// Uniform double in [0, 1).
  double uniform_real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace promptseg
