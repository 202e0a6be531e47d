#pragma once

#include <cstdint>
#include <random>

#include "rankone/types.hpp"

namespace rankone {

/// Seeded 64-bit generator with platform-independent derived draws.
///
/// std::mt19937_64 output is fixed by the standard; the bounded and
/// floating-point draws below are written out so that streams are
/// reproducible across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n), n >= 1.
  std::uint64_t below(std::uint64_t n);

  /// Uniform integer in [0, n), n >= 1, arbitrary precision.
  BigInt below(const BigInt &n);

  /// Uniform double in [0, 1) on the 2^-53 grid.
  double uniform();

  /// Independent stream derived from this generator's seed.
  Rng split(std::uint64_t stream) const;

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace rankone
