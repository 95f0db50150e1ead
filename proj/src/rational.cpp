#include "cmeb/rational.hpp"

#include <cctype>

namespace cmeb {

Rational parse_rational(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw std::invalid_argument("empty rational literal");

  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Rational num = parse_rational(s.substr(0, slash));
    Rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in " + text);
    Rational q = num / den;
    q.canonicalize();
    return q;
  }

  bool neg = false;
  size_t i = 0;
  if (s[i] == '+' || s[i] == '-') neg = (s[i++] == '-');

  mpz_class mantissa = 0;
  long frac_digits = 0, exponent = 0;
  bool any_digit = false, in_frac = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      mantissa = mantissa * 10 + (c - '0');
      if (in_frac) ++frac_digits;
      any_digit = true;
    } else if (c == '.' && !in_frac) {
      in_frac = true;
    } else if ((c == 'e' || c == 'E') && any_digit) {
      exponent = std::stol(s.substr(i + 1));
      break;
    } else {
      throw std::invalid_argument("bad rational literal: " + text);
    }
  }
  if (!any_digit) throw std::invalid_argument("bad rational literal: " + text);

  Rational q(mantissa);
  long shift = exponent - frac_digits;
  mpz_class p10;
  mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
  if (shift >= 0)
    q *= Rational(p10);
  else
    q /= Rational(p10);
  if (neg) q = -q;
  q.canonicalize();
  return q;
}

std::string rational_to_string(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

}  // namespace cmeb
