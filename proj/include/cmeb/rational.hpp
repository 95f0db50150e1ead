#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cmeb {

using Rational = mpq_class;

inline Rational rat(long num, long den = 1) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline double to_double(const Rational& q) { return q.get_d(); }

// Parses "123", "-4/5", "0.8", "2.5e3" into an exact rational.
Rational parse_rational(const std::string& text);

// Decimal string without precision loss ("3/4" when not exactly representable
// in decimal is emitted as num/den).
std::string rational_to_string(const Rational& q);

}  // namespace cmeb
