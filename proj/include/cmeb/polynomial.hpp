#pragma once

#include <map>
#include <string>
#include <vector>

#include "cmeb/multiindex.hpp"
#include "cmeb/rational.hpp"

namespace cmeb {

using State = std::vector<int64_t>;

// Sparse multivariate polynomial with exact rational coefficients.
// Zero coefficients are never stored; the variable count is fixed at
// construction and shared by all terms.
class Polynomial {
 public:
  using TermMap = std::map<MultiIndex, Rational>;

  explicit Polynomial(size_t n = 0) : n_(n) {}

  static Polynomial constant(size_t n, const Rational& c);
  static Polynomial variable(size_t n, size_t axis);   // x_{axis+1}
  static Polynomial monomial(const MultiIndex& alpha, const Rational& c);

  size_t vars() const { return n_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  uint32_t degree() const;  // 0 for the zero polynomial
  size_t term_count() const { return terms_.size(); }
  const TermMap& terms() const { return terms_; }
  Rational coeff(const MultiIndex& alpha) const;

  void add_term(const MultiIndex& alpha, const Rational& c);

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator-() const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(const Rational& c) const;
  Polynomial pow(uint32_t k) const;

  bool operator==(const Polynomial& o) const {
    return n_ == o.n_ && terms_ == o.terms_;
  }

  Rational eval(const State& x) const;
  // Substitutes x -> x + v, expanding each monomial binomially.
  Polynomial shift(const std::vector<int64_t>& v) const;
  // Restriction to one axis: all other variables set to zero; returns the
  // univariate coefficient list c[0..deg] of that axis.
  std::vector<Rational> restrict_axis(size_t axis) const;
  // Restriction to the diagonal x_i = t for all i; univariate coefficients.
  std::vector<Rational> restrict_diagonal() const;

  // Sorted (multi-index, numerator, denominator) triples, e.g.
  // "2,0:3/1" for 3*x1^2 in two variables. Canonical & bit-stable.
  std::string serialize() const;
  std::string to_string(const std::vector<std::string>& var_names = {}) const;

 private:
  size_t n_;
  TermMap terms_;
};

// (x + v)^alpha expanded exactly.
Polynomial shift_expand(const MultiIndex& alpha, const std::vector<int64_t>& v);

}  // namespace cmeb
