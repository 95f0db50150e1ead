#include "cmeb/polynomial.hpp"

#include <stdexcept>

namespace cmeb {

Polynomial Polynomial::constant(size_t n, const Rational& c) {
  Polynomial p(n);
  p.add_term(MultiIndex(n), c);
  return p;
}

Polynomial Polynomial::variable(size_t n, size_t axis) {
  if (axis >= n) throw std::out_of_range("variable axis out of range");
  Polynomial p(n);
  p.add_term(MultiIndex(n).plus_unit(axis), 1);
  return p;
}

Polynomial Polynomial::monomial(const MultiIndex& alpha, const Rational& c) {
  Polynomial p(alpha.vars());
  p.add_term(alpha, c);
  return p;
}

bool Polynomial::is_constant() const {
  return terms_.empty() ||
         (terms_.size() == 1 && terms_.begin()->first.degree() == 0);
}

uint32_t Polynomial::degree() const {
  uint32_t d = 0;
  for (const auto& [a, c] : terms_) d = std::max(d, a.degree());
  return d;
}

Rational Polynomial::coeff(const MultiIndex& alpha) const {
  auto it = terms_.find(alpha);
  return it == terms_.end() ? Rational(0) : it->second;
}

void Polynomial::add_term(const MultiIndex& alpha, const Rational& c) {
  if (alpha.vars() != n_) throw std::invalid_argument("term arity mismatch");
  if (c == 0) return;
  auto [it, fresh] = terms_.emplace(alpha, c);
  if (!fresh) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r(*this);
  for (const auto& [a, c] : o.terms_) r.add_term(a, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  Polynomial r(*this);
  for (const auto& [a, c] : o.terms_) r.add_term(a, -c);
  return r;
}

Polynomial Polynomial::operator-() const {
  Polynomial r(n_);
  for (const auto& [a, c] : terms_) r.terms_.emplace(a, -c);
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (n_ != o.n_) throw std::invalid_argument("polynomial arity mismatch");
  Polynomial r(n_);
  for (const auto& [a, ca] : terms_)
    for (const auto& [b, cb] : o.terms_) r.add_term(a + b, ca * cb);
  return r;
}

Polynomial Polynomial::operator*(const Rational& c) const {
  Polynomial r(n_);
  if (c == 0) return r;
  for (const auto& [a, ca] : terms_) r.terms_.emplace(a, ca * c);
  return r;
}

Polynomial Polynomial::pow(uint32_t k) const {
  Polynomial r = Polynomial::constant(n_, 1);
  Polynomial base(*this);
  while (k) {
    if (k & 1) r = r * base;
    base = base * base;
    k >>= 1;
  }
  return r;
}

Rational Polynomial::eval(const State& x) const {
  if (x.size() != n_) throw std::invalid_argument("state arity mismatch");
  Rational total = 0;
  for (const auto& [a, c] : terms_) {
    Rational m = c;
    for (size_t i = 0; i < n_; ++i) {
      mpz_class p;
      mpz_class xi(static_cast<long>(x[i]));
      mpz_pow_ui(p.get_mpz_t(), xi.get_mpz_t(), a.e[i]);
      m *= Rational(p);
    }
    total += m;
  }
  return total;
}

Polynomial Polynomial::shift(const std::vector<int64_t>& v) const {
  if (v.size() != n_) throw std::invalid_argument("shift arity mismatch");
  Polynomial r(n_);
  for (const auto& [a, c] : terms_) r = r + shift_expand(a, v) * c;
  return r;
}

std::vector<Rational> Polynomial::restrict_axis(size_t axis) const {
  std::vector<Rational> c(degree() + 1, Rational(0));
  uint32_t top = 0;
  for (const auto& [a, ca] : terms_) {
    bool pure = true;
    for (size_t i = 0; i < n_; ++i)
      if (i != axis && a.e[i] != 0) pure = false;
    if (!pure) continue;
    c[a.e[axis]] += ca;
    top = std::max(top, a.e[axis]);
  }
  c.resize(top + 1);
  while (c.size() > 1 && c.back() == 0) c.pop_back();
  return c;
}

std::vector<Rational> Polynomial::restrict_diagonal() const {
  std::vector<Rational> c(degree() + 1, Rational(0));
  for (const auto& [a, ca] : terms_) c[a.degree()] += ca;
  while (c.size() > 1 && c.back() == 0) c.pop_back();
  return c;
}

std::string Polynomial::serialize() const {
  std::string s;
  for (const auto& [a, c] : terms_) {
    if (!s.empty()) s += ";";
    s += a.to_string() + ":" + c.get_num().get_str() + "/" +
         c.get_den().get_str();
  }
  return s.empty() ? "0" : s;
}

std::string Polynomial::to_string(const std::vector<std::string>& names) const {
  if (terms_.empty()) return "0";
  std::string s;
  for (const auto& [a, c] : terms_) {
    bool neg = c < 0;
    Rational mag = neg ? Rational(-c) : c;
    if (s.empty())
      s += neg ? "-" : "";
    else
      s += neg ? " - " : " + ";
    std::string mono;
    for (size_t i = 0; i < n_; ++i) {
      if (a.e[i] == 0) continue;
      if (!mono.empty()) mono += "*";
      mono += (i < names.size() ? names[i] : "x" + std::to_string(i + 1));
      if (a.e[i] > 1) mono += "^" + std::to_string(a.e[i]);
    }
    if (mono.empty())
      s += rational_to_string(mag);
    else if (mag == 1)
      s += mono;
    else
      s += rational_to_string(mag) + "*" + mono;
  }
  return s;
}

Polynomial shift_expand(const MultiIndex& alpha, const std::vector<int64_t>& v) {
  size_t n = alpha.vars();
  if (v.size() != n) throw std::invalid_argument("shift arity mismatch");
  Polynomial r = Polynomial::constant(n, 1);
  for (size_t i = 0; i < n; ++i) {
    // (x_i + v_i)^{alpha_i} by the binomial theorem
    Polynomial f(n);
    mpz_class vp = 1;
    for (uint32_t k = alpha.e[i]; k + 1 > 0; --k) {
      MultiIndex m(n);
      m.e[i] = k;
      mpz_class b;
      mpz_bin_uiui(b.get_mpz_t(), alpha.e[i], k);
      f.add_term(m, Rational(b * vp));
      vp *= v[i];
      if (k == 0) break;
    }
    r = r * f;
  }
  return r;
}

}  // namespace cmeb
