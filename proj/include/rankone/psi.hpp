#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rankone/types.hpp"

namespace rankone {

/// Slowly growing rate function psi with psi(m) -> inf and psi(m)/sqrt(m)
/// nonincreasing.
///
///   power: psi(m) = (m + 2)^alpha, alpha in (0, 1/2), alpha kept exact
///   log:   psi(m) = ln(m + 2)
///   table: piecewise-linear through (m, psi) points; undefined past the
///          last point
struct PsiSpec {
  enum class Kind { Power, Log, Table };

  Kind kind = Kind::Power;
  Rational alpha{1, 4};
  std::vector<std::pair<double, double>> table;

  static PsiSpec power(const Rational &alpha);
  static PsiSpec log();
  static PsiSpec fromTable(std::vector<std::pair<double, double>> points);

  void validate() const;
  double operator()(double m) const;

  /// psi(h) >= sqrt(target), exact for the power kind.
  bool reachesSqrt(const BigInt &h, const BigInt &target) const;

  /// Smallest integer h >= 0 with psi(h) >= sqrt(target).
  BigInt threshold(const BigInt &target) const;

  std::string describe() const;
  bool operator==(const PsiSpec &o) const;
};

/// Parses a decimal string such as "0.25" into an exact rational.
Rational parse_decimal(const std::string &text);

} // namespace rankone
