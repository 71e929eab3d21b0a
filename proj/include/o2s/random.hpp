#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace o2s {

std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic pseudorandom stream. The engine (mt19937_64) and every
/// distribution below are fully specified here, so a given seed yields the
/// same draws on every platform and standard library.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  /// Stream for one scene job, derived from the run seed and the scene id.
  static RandomStream for_scene(std::uint64_t global_seed, std::string_view scene_id) {
    return RandomStream(global_seed ^ fnv1a64(scene_id));
  }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace o2s
