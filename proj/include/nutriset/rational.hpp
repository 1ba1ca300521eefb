#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "nutriset/error.hpp"

namespace nutriset {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses an unsigned decimal literal ("12", "1.5", "0,25", ".5") exactly.
/// Both '.' and ',' act as the decimal separator. Returns nullopt for
/// anything else, including signs and exponents.
inline std::optional<Rational> parse_decimal(std::string_view text) {
  if (text.empty()) return std::nullopt;
  BigInt numerator = 0;
  BigInt denominator = 1;
  bool seen_separator = false;
  bool seen_digit = false;
  for (char c : text) {
    if (c >= '0' && c <= '9') {
      numerator = numerator * 10 + (c - '0');
      if (seen_separator) denominator *= 10;
      seen_digit = true;
    } else if ((c == '.' || c == ',') && !seen_separator) {
      seen_separator = true;
    } else {
      return std::nullopt;
    }
  }
  if (!seen_digit) return std::nullopt;
  return Rational(numerator, denominator);
}

/// Exact rational for the shortest decimal string that round-trips to `value`.
/// JSON numbers like 225.14 arrive as doubles; this recovers 22514/100 rather
/// than the binary expansion of the nearest double.
inline Rational rational_from_double(double value) {
  if (!std::isfinite(value)) {
    throw ValidationError("non-finite number");
  }
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  if (ec != std::errc()) {
    throw ValidationError("number not representable");
  }
  std::string_view text(buf, static_cast<std::size_t>(end - buf));
  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  auto r = parse_decimal(text);
  if (!r) {
    throw ValidationError("number not representable");
  }
  return negative ? Rational(-*r) : *r;
}

/// Correctly rounded conversion to the nearest double.
inline double to_double(const Rational& r) {
  return r.convert_to<double>();
}

inline std::string to_string(const Rational& r) {
  return r.str();
}

}  // namespace nutriset
