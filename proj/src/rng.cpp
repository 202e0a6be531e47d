#include "rankone/rng.hpp"

#include <stdexcept>

namespace rankone {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) {
    throw std::invalid_argument("Rng::below: empty range");
  }
  // Rejection on the largest multiple of n.
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

BigInt Rng::below(const BigInt &n) {
  if (n <= 0) {
    throw std::invalid_argument("Rng::below: empty range");
  }
  if (n.fits_ulong_p()) {
    return BigInt(below(static_cast<std::uint64_t>(n.get_ui())));
  }
  const std::size_t bits = mpz_sizeinbase(n.get_mpz_t(), 2);
  const std::size_t words = (bits + 63) / 64;
  const std::size_t topBits = bits - (words - 1) * 64;
  for (;;) {
    BigInt v = 0;
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t x = engine_();
      if (w == 0 && topBits < 64) {
        x &= (std::uint64_t{1} << topBits) - 1;
      }
      v <<= 64;
      v += BigInt(static_cast<unsigned long>(x));
    }
    if (v < n) {
      return v;
    }
  }
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 1)));
}

} // namespace rankone
