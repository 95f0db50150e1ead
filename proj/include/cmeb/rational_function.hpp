#pragma once

#include <vector>

#include "cmeb/polynomial.hpp"

namespace cmeb {

// num / prod(factors). The denominator is kept as a list of polynomial
// factors so that a common denominator across reactions can be formed as a
// syntactic least common multiple; no polynomial GCD or factorization is
// ever attempted.
class RationalFunction {
 public:
  explicit RationalFunction(size_t n = 0) : num_(Polynomial::constant(n, 0)) {}
  explicit RationalFunction(Polynomial num) : num_(std::move(num)) {}
  RationalFunction(Polynomial num, std::vector<Polynomial> den_factors);

  size_t vars() const { return num_.vars(); }
  const Polynomial& num() const { return num_; }
  const std::vector<Polynomial>& den_factors() const { return den_; }
  Polynomial den() const;  // expanded product
  bool den_trivial() const { return den_.empty(); }

  RationalFunction operator+(const RationalFunction& o) const;
  RationalFunction operator-(const RationalFunction& o) const;
  RationalFunction operator*(const RationalFunction& o) const;
  RationalFunction operator/(const RationalFunction& o) const;
  RationalFunction pow(int32_t k) const;

  Rational eval(const State& x) const;  // throws when the denominator is 0

 private:
  void drop_constant_factors();

  Polynomial num_;
  std::vector<Polynomial> den_;  // each non-constant, canonical order
};

// Syntactic LCM of factor lists: every distinct factor with its maximum
// multiplicity across the inputs, ordered canonically.
std::vector<Polynomial> factor_lcm(
    const std::vector<std::vector<Polynomial>>& lists);

// prod(all) / prod(part); part must be a sub-multiset of all. The arity n
// fixes the result when both lists are empty.
Polynomial factor_complement(const std::vector<Polynomial>& all,
                             const std::vector<Polynomial>& part, size_t n);

}  // namespace cmeb
