#pragma once

#include <cstdint>
#include <random>

namespace freqprint {

/// Seed derivation for independent per-task streams (splitmix64 finaliser).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// mt19937_64 with distribution code that does not depend on the standard
/// library's unspecified distribution algorithms, so streams are identical
/// across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  std::uint64_t below(std::uint64_t n);    // [0, n)
  double normal();                         // N(0, 1)
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace freqprint
