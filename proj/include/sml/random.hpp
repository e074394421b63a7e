#pragma once
#include <cstdint>
#include <cmath>
#include <random>

namespace sml {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based child seed: stream `id` of `master` does not depend on
// the order in which streams are created.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t id) {
  return splitmix64(master + 0x9e3779b97f4a7c15ULL * (id + 1));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t id = 0) {
  return Rng(derive_seed(master, id));
}

// Portable uniform double in [0,1): std::uniform_real_distribution is not
// bit-identical across standard libraries.
inline double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double a, double b) { return a + (b - a) * uniform01(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) { return std::size_t(uniform01(rng) * double(n)); }

// Box-Muller, portable for the same reason.
inline double normal(Rng& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace sml
