#pragma once

// Platform-stable random streams. xoshiro256** seeded from (master seed,
// replica index) so every replica owns an independent, reproducible stream;
// the normal and Poisson samplers are implemented here rather than taken from
// <random> because the standard distributions are not portable bit-for-bit.

#include <cstdint>

namespace superlab {

/// splitmix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

class Rng {
 public:
  /// Distinct (master_seed, replica) pairs give distinct initial states.
  Rng(std::uint64_t master_seed, std::uint64_t replica);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double normal();
  /// Poisson count with the given mean >= 0.
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace superlab
