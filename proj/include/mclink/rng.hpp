// Deterministic RNG stream derivation. Every sampling routine takes an
// explicit engine; parallel code derives one engine per work unit from
// (master seed, unit indices) so results are independent of thread count.
#pragma once

#include <cstdint>
#include <random>

namespace mclink {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a = 0,
                                std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ (a + 0x516cc3a1886d4e75ULL));
  s = splitmix64(s ^ (b + 0x2545f4914f6cdd1dULL));
  s = splitmix64(s ^ (c + 0x27d4eb2f165667c5ULL));
  return std::mt19937_64(s);
}

inline long long poisson_draw(double mean, std::mt19937_64& rng) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<long long> dist(mean);
  return dist(rng);
}

}  // namespace mclink
