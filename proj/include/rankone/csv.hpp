#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "rankone/types.hpp"

namespace rankone::csv {

/// RFC-4180 writer: CRLF line endings, fields quoted when they contain a
/// comma, quote or line break.
class Writer {
public:
  explicit Writer(std::ostream &out) : out_(&out) {}

  Writer &header(const std::vector<std::string> &names);
  Writer &field(const std::string &value);
  Writer &field(const BigInt &value) { return field(value.get_str()); }
  Writer &field(long long value) { return field(std::to_string(value)); }
  Writer &field(unsigned long long value) {
    return field(std::to_string(value));
  }
  Writer &field(std::size_t value) {
    return field(std::to_string(value));
  }
  Writer &field(bool value) { return field(std::string(value ? "true" : "false")); }
  Writer &field(double value);
  /// Three fields: numerator, denominator, float rendering.
  Writer &rational(const Rational &q);
  /// Two fields: numerator, denominator.
  Writer &fraction(const Rational &q);
  void endRow();

private:
  std::ostream *out_;
  bool rowStarted_ = false;
};

std::string format_double(double v);

} // namespace rankone::csv
