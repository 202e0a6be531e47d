#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

namespace rankone {

using BigInt = mpz_class;
using Rational = mpq_class;

/// Level index inside a tower. Towers taller than 2^62 cannot carry level
/// sets; their heights are still tracked exactly as BigInt.
using Level = std::int64_t;

/// Base class for every error raised by the library. `module` names the
/// component that raised it and is reported verbatim by the CLI.
class Error : public std::runtime_error {
public:
  Error(std::string module, const std::string &message)
      : std::runtime_error(message), module_(std::move(module)) {}

  const std::string &module() const { return module_; }

private:
  std::string module_;
};

/// Malformed input: construction parameters, sets, grids, config values.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// The construction does not have enough stages for the request.
class DepthError : public Error {
public:
  DepthError(std::string module, const std::string &message,
             std::size_t requiredStage)
      : Error(std::move(module), message), required_(requiredStage) {}

  std::size_t requiredStage() const { return required_; }

private:
  std::size_t required_;
};

/// A certified interval [lo, hi] containing an exact measure.
struct MeasureEnclosure {
  Rational lo;
  Rational hi;

  Rational slack() const { return hi - lo; }
  bool exact() const { return lo == hi; }
  bool contains(const Rational &v) const { return lo <= v && v <= hi; }
};

inline std::int64_t toInt64(const BigInt &v, const char *module,
                            const char *what) {
  if (!v.fits_slong_p()) {
    throw ValidationError(module, std::string(what) +
                                      " exceeds the 64-bit level range");
  }
  return v.get_si();
}

inline double toDouble(const Rational &q) { return q.get_d(); }

inline std::string toString(const Rational &q) { return q.get_str(); }

} // namespace rankone
