#include "rankone/psi.hpp"

#include <cmath>
#include <sstream>

namespace rankone {

namespace {
constexpr const char *kModule = "sidon";
}

Rational parse_decimal(const std::string &text) {
  std::string s = text;
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s = s.substr(1);
  }
  const auto dot = s.find('.');
  std::string digits = s;
  std::size_t scale = 0;
  if (dot != std::string::npos) {
    digits = s.substr(0, dot) + s.substr(dot + 1);
    scale = s.size() - dot - 1;
  }
  if (digits.empty() ||
      digits.find_first_not_of("0123456789") != std::string::npos) {
    throw ValidationError(kModule, "not a decimal number: " + text);
  }
  BigInt den = 1;
  for (std::size_t i = 0; i < scale; ++i) {
    den *= 10;
  }
  Rational q(BigInt(digits), den);
  q.canonicalize();
  return neg ? Rational(-q) : q;
}

PsiSpec PsiSpec::power(const Rational &alpha) {
  PsiSpec p;
  p.kind = Kind::Power;
  p.alpha = alpha;
  return p;
}

PsiSpec PsiSpec::log() {
  PsiSpec p;
  p.kind = Kind::Log;
  return p;
}

PsiSpec PsiSpec::fromTable(std::vector<std::pair<double, double>> points) {
  PsiSpec p;
  p.kind = Kind::Table;
  p.table = std::move(points);
  return p;
}

void PsiSpec::validate() const {
  switch (kind) {
  case Kind::Power:
    if (alpha <= 0 || alpha >= Rational(1, 2)) {
      throw ValidationError(kModule, "power psi needs alpha in (0, 1/2)");
    }
    if (alpha.get_den() > 1000) {
      throw ValidationError(kModule,
                            "power psi alpha denominator must be <= 1000");
    }
    return;
  case Kind::Log:
    return;
  case Kind::Table:
    if (table.size() < 2) {
      throw ValidationError(kModule, "psi table needs at least two points");
    }
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto [m, v] = table[i];
      if (m < 1 || v <= 0) {
        throw ValidationError(kModule,
                              "psi table points need m >= 1 and psi > 0");
      }
      if (i > 0) {
        const auto [pm, pv] = table[i - 1];
        if (m <= pm) {
          throw ValidationError(kModule, "psi table m values must increase");
        }
        if (v < pv) {
          throw ValidationError(kModule, "psi table is not nondecreasing");
        }
        if (v / std::sqrt(m) > pv / std::sqrt(pm)) {
          throw ValidationError(kModule,
                                "psi table: psi(m)/sqrt(m) increases");
        }
      }
    }
    if (table.back().second <= table.front().second) {
      throw ValidationError(kModule, "psi table does not grow");
    }
    return;
  }
}

double PsiSpec::operator()(double m) const {
  switch (kind) {
  case Kind::Power:
    return std::pow(m + 2.0, alpha.get_d());
  case Kind::Log:
    return std::log(m + 2.0);
  case Kind::Table: {
    if (m < table.front().first || m > table.back().first) {
      throw ValidationError(kModule, "psi table evaluated outside its range");
    }
    for (std::size_t i = 1; i < table.size(); ++i) {
      if (m <= table[i].first) {
        const auto [m0, v0] = table[i - 1];
        const auto [m1, v1] = table[i];
        return v0 + (v1 - v0) * (m - m0) / (m1 - m0);
      }
    }
    return table.back().second;
  }
  }
  return 0.0;
}

bool PsiSpec::reachesSqrt(const BigInt &h, const BigInt &target) const {
  if (kind == Kind::Power) {
    // (h+2)^(a/b) >= target^(1/2)  <=>  (h+2)^(2a) >= target^b
    const unsigned long a = alpha.get_num().get_ui();
    const unsigned long b = alpha.get_den().get_ui();
    BigInt lhs;
    BigInt rhs;
    const BigInt base = h + 2;
    mpz_pow_ui(lhs.get_mpz_t(), base.get_mpz_t(), 2 * a);
    mpz_pow_ui(rhs.get_mpz_t(), target.get_mpz_t(), b);
    return lhs >= rhs;
  }
  return (*this)(h.get_d()) >= std::sqrt(target.get_d());
}

BigInt PsiSpec::threshold(const BigInt &target) const {
  if (reachesSqrt(0, target)) {
    return 0;
  }
  BigInt hi = 1;
  while (!reachesSqrt(hi, target)) {
    hi *= 2;
    if (mpz_sizeinbase(hi.get_mpz_t(), 2) > 200) {
      throw ValidationError(kModule, "psi grows too slowly to reach sqrt(" +
                                         target.get_str() + ")");
    }
  }
  BigInt lo = hi / 2;
  while (hi - lo > 1) {
    BigInt mid = (lo + hi) / 2;
    if (reachesSqrt(mid, target)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::string PsiSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
  case Kind::Power:
    os << "power(" << alpha.get_str() << ")";
    break;
  case Kind::Log:
    os << "log";
    break;
  case Kind::Table:
    os << "table(" << table.size() << ")";
    break;
  }
  return os.str();
}

bool PsiSpec::operator==(const PsiSpec &o) const {
  return kind == o.kind && (kind != Kind::Power || alpha == o.alpha) &&
         (kind != Kind::Table || table == o.table);
}

} // namespace rankone
