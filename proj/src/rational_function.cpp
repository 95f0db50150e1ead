#include "cmeb/rational_function.hpp"

#include <algorithm>
#include <stdexcept>

namespace cmeb {

namespace {

bool factor_less(const Polynomial& a, const Polynomial& b) {
  return a.serialize() < b.serialize();
}

}  // namespace

RationalFunction::RationalFunction(Polynomial num,
                                   std::vector<Polynomial> den_factors)
    : num_(std::move(num)), den_(std::move(den_factors)) {
  for (const auto& f : den_)
    if (f.is_zero()) throw std::invalid_argument("zero denominator factor");
  drop_constant_factors();
  std::sort(den_.begin(), den_.end(), factor_less);
}

void RationalFunction::drop_constant_factors() {
  std::vector<Polynomial> kept;
  for (auto& f : den_) {
    if (f.is_constant()) {
      Rational c = f.coeff(MultiIndex(vars()));
      num_ = num_ * Rational(1 / c);
    } else {
      kept.push_back(std::move(f));
    }
  }
  den_ = std::move(kept);
}

Polynomial RationalFunction::den() const {
  Polynomial d = Polynomial::constant(vars(), 1);
  for (const auto& f : den_) d = d * f;
  return d;
}

std::vector<Polynomial> factor_lcm(
    const std::vector<std::vector<Polynomial>>& lists) {
  // multiplicity per distinct factor = max over lists
  std::vector<Polynomial> result;
  std::vector<std::string> keys;
  for (const auto& list : lists) {
    std::map<std::string, std::pair<Polynomial, size_t>> counts;
    for (const auto& f : list) {
      auto [it, fresh] = counts.emplace(f.serialize(), std::make_pair(f, 0));
      it->second.second += 1;
    }
    for (auto& [key, fc] : counts) {
      size_t have = 0;
      for (size_t i = 0; i < keys.size(); ++i)
        if (keys[i] == key) ++have;
      for (size_t i = have; i < fc.second; ++i) {
        result.push_back(fc.first);
        keys.push_back(key);
      }
    }
  }
  std::sort(result.begin(), result.end(), factor_less);
  return result;
}

Polynomial factor_complement(const std::vector<Polynomial>& all,
                             const std::vector<Polynomial>& part, size_t n) {
  std::vector<std::string> remaining;
  for (const auto& f : part) remaining.push_back(f.serialize());
  Polynomial r;
  bool first = true;
  for (const auto& f : all) {
    auto it = std::find(remaining.begin(), remaining.end(), f.serialize());
    if (it != remaining.end()) {
      remaining.erase(it);
      continue;
    }
    r = first ? f : r * f;
    first = false;
  }
  if (!remaining.empty())
    throw std::invalid_argument("factor list is not a sub-multiset");
  return first ? Polynomial::constant(n, 1) : r;
}

RationalFunction RationalFunction::operator+(const RationalFunction& o) const {
  auto common = factor_lcm({den_, o.den_});
  Polynomial n1 = num_ * factor_complement(common, den_, vars());
  Polynomial n2 = o.num_ * factor_complement(common, o.den_, vars());
  return RationalFunction(n1 + n2, common);
}

RationalFunction RationalFunction::operator-(const RationalFunction& o) const {
  auto common = factor_lcm({den_, o.den_});
  Polynomial n1 = num_ * factor_complement(common, den_, vars());
  Polynomial n2 = o.num_ * factor_complement(common, o.den_, vars());
  return RationalFunction(n1 - n2, common);
}

RationalFunction RationalFunction::operator*(const RationalFunction& o) const {
  std::vector<Polynomial> den = den_;
  den.insert(den.end(), o.den_.begin(), o.den_.end());
  return RationalFunction(num_ * o.num_, std::move(den));
}

RationalFunction RationalFunction::operator/(const RationalFunction& o) const {
  if (o.num_.is_zero()) throw std::invalid_argument("division by zero");
  std::vector<Polynomial> den = den_;
  if (o.num_.is_constant()) {
    Rational c = o.num_.coeff(MultiIndex(vars()));
    Polynomial n = num_ * Rational(1 / c);
    for (const auto& f : o.den_) n = n * f;
    return RationalFunction(std::move(n), std::move(den));
  }
  den.push_back(o.num_);
  Polynomial n = num_;
  for (const auto& f : o.den_) n = n * f;
  return RationalFunction(std::move(n), std::move(den));
}

RationalFunction RationalFunction::pow(int32_t k) const {
  RationalFunction base = *this;
  if (k < 0) {
    base = RationalFunction(Polynomial::constant(vars(), 1)) / base;
    k = -k;
  }
  RationalFunction r(Polynomial::constant(vars(), 1));
  while (k) {
    if (k & 1) r = r * base;
    base = base * base;
    k >>= 1;
  }
  return r;
}

Rational RationalFunction::eval(const State& x) const {
  Rational d = 1;
  for (const auto& f : den_) d *= f.eval(x);
  if (d == 0) throw std::domain_error("denominator vanishes at state");
  return num_.eval(x) / d;
}

}  // namespace cmeb
