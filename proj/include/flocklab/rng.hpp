#pragma once

// Counter-based random streams: every draw is a pure function of
// (seed, stream, counter), so particle updates can be sharded across
// threads in any order without changing the sampled values. Stream id is
// the particle index; the counter advances with the step number.

#include <cstdint>

namespace flocklab {

// SplitMix64 finalizer; full-period avalanche on 64-bit counters.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(stream * 0xda942042e4dd58b5ULL))) {}

  // Uniform in (0, 1]; strictly positive so log() below is safe.
  double uniform(std::uint64_t counter) const {
    const std::uint64_t bits = mix64(key_ + counter * 0x9e3779b97f4a7c15ULL);
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes counters 2c and 2c+1.
  double normal(std::uint64_t counter) const;

 private:
  std::uint64_t key_;
};

}  // namespace flocklab
