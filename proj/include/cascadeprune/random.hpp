#pragma once

#include <cmath>
#include <cstdint>

namespace cascadeprune {

// splitmix64 step: advances the state and returns a mixed 64-bit draw.
// Small, seedable, and identical on every platform, which is what the
// byte-for-byte reproducibility guarantees hang on.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d9b9e6aa58bcbfULL;
  return z ^ (z >> 31);
}

// Counter-based draw: a pure function of (seed, stream, index), so parallel
// generation can hand out indices without sharing state.
inline std::uint64_t mix_draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t state = seed;
  state = state * 0x9e3779b97f4a7c15ULL + 0x100000001b3ULL;
  state ^= stream * 0xc2b2ae3d27d4eb4fULL;
  state ^= index * 0x165667b19e3779f9ULL;
  return splitmix64(state);
}

// Uniform in the open interval (0, 1); never returns an endpoint, so logs
// and inverses stay finite.
inline double uniform_open(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return (static_cast<double>(mix_draw(seed, stream, index) >> 11) + 0.5) * 0x1p-53;
}

// Standard normal via Box-Muller on two counter draws.
inline double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const double u1 = uniform_open(seed, stream, 2 * index);
  const double u2 = uniform_open(seed, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace cascadeprune
