#include "rankone/csv.hpp"

#include <cmath>
#include <cstdio>

namespace rankone::csv {

std::string format_double(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

Writer &Writer::header(const std::vector<std::string> &names) {
  for (const auto &n : names) {
    field(n);
  }
  endRow();
  return *this;
}

Writer &Writer::field(const std::string &value) {
  if (rowStarted_) {
    *out_ << ',';
  }
  rowStarted_ = true;
  if (value.find_first_of(",\"\r\n") == std::string::npos) {
    *out_ << value;
    return *this;
  }
  *out_ << '"';
  for (const char c : value) {
    if (c == '"') {
      *out_ << '"';
    }
    *out_ << c;
  }
  *out_ << '"';
  return *this;
}

Writer &Writer::field(double value) { return field(format_double(value)); }

Writer &Writer::rational(const Rational &q) {
  field(q.get_num().get_str());
  field(q.get_den().get_str());
  return field(q.get_d());
}

Writer &Writer::fraction(const Rational &q) {
  field(q.get_num().get_str());
  return field(q.get_den().get_str());
}

void Writer::endRow() {
  *out_ << "\r\n";
  rowStarted_ = false;
}

} // namespace rankone::csv
