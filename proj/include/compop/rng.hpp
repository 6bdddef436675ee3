#ifndef COMPOP_RNG_HPP
#define COMPOP_RNG_HPP

#include <cstdint>
#include <random>

namespace compop {

// splitmix64 finalizer; maps (seed, trajectory index) to an independent stream seed.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed + 0x9E3779B97F4A7C15ull) + (index + 1) * 0x9E3779B97F4A7C15ull);
}

// uniform in [0, 1) from the top 53 bits; identical across standard libraries
inline double unit_uniform(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

}  // namespace compop

#endif
