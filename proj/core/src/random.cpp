#include "shrinkglht/random.hpp"

#include <cmath>
#include <numbers>

namespace shrinkglht {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const std::uint64_t k1 = splitmix64(seed);
  const std::uint64_t k2 = splitmix64(k1 ^ splitmix64(a + 0x632be59bd9b4e019ULL));
  const std::uint64_t k3 = splitmix64(k2 ^ splitmix64(b + 0x8cb92ba72f3d8dd7ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(k3), static_cast<std::uint32_t>(k3 >> 32),
                    static_cast<std::uint32_t>(k2), static_cast<std::uint32_t>(k2 >> 32)};
  return Rng(seq);
}

double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double NormalSource::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_open(*rng_);
  const double u2 = uniform_open(*rng_);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

}  // namespace shrinkglht
