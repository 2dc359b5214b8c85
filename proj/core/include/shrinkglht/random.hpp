#pragma once

// Keyed random substreams. Every stochastic step draws from a generator
// seeded by (seed, key...), so results never depend on scheduling.

#include <cstdint>
#include <random>

namespace shrinkglht {

inline constexpr std::uint64_t kDefaultSeed = 271828;

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Independent generator for the stream identified by (seed, a, b).
Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Standard normal draw with a fixed, portable transform (Box-Muller on
/// 53-bit uniforms) so sequences match across standard libraries.
class NormalSource {
 public:
  explicit NormalSource(Rng& rng) : rng_(&rng) {}
  double operator()();

 private:
  Rng* rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Uniform double in (0, 1).
double uniform_open(Rng& rng);

}  // namespace shrinkglht
