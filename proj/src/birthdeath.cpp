#include "cmeb/birthdeath.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <stdexcept>

#include "cmeb/linprog.hpp"

namespace cmeb {

BirthDeathModel BirthDeathModel::from_network(const ReactionNetwork& net) {
  if (net.n() != 1)
    throw std::invalid_argument("birth-death structure needs exactly one species");
  for (size_t j = 0; j < net.reaction_count(); ++j) {
    int64_t v = net.reaction(j).net()[0];
    if (v != 1 && v != -1)
      throw std::invalid_argument("reaction " + std::to_string(j + 1) +
                                  " changes the copy number by " + std::to_string(v) +
                                  "; birth-death needs unit jumps");
  }
  auto shared = std::make_shared<const ReactionNetwork>(net);
  auto sum_side = [shared](int64_t x, int64_t side) {
    Rational total = 0;
    State st{x};
    for (size_t j = 0; j < shared->reaction_count(); ++j)
      if (shared->reaction(j).net()[0] == side) total += shared->propensity_eval(j, st);
    return to_double(total);
  };
  BirthDeathModel m;
  m.birth = [sum_side](int64_t x) { return sum_side(x, 1); };
  m.death = [sum_side](int64_t x) { return sum_side(x, -1); };
  return m;
}

GammaProfile gamma_profile(const BirthDeathModel& m, int64_t R) {
  if (R < 0) throw std::invalid_argument("range must be nonnegative");
  GammaProfile g;
  g.log_gamma.assign(R + 1, -kInf);
  g.log_gamma[0] = 0.0;
  double lg = 0.0;
  bool extinct = false;
  for (int64_t x = 1; x <= R && !extinct; ++x) {
    double ap = m.birth(x - 1), am = m.death(x);
    if (!(am > 0))
      throw std::domain_error("death rate vanishes at x = " + std::to_string(x));
    if (ap < 0)
      throw std::domain_error("negative birth rate at x = " + std::to_string(x - 1));
    if (ap == 0) {
      extinct = true;  // gamma stays zero from here on
      break;
    }
    lg += std::log(ap) - std::log(am);
    g.log_gamma[x] = lg;
  }

  double mx = -kInf;
  for (int64_t x = 0; x <= R; ++x)
    if (g.log_gamma[x] > mx) {
      mx = g.log_gamma[x];
      g.mode = x;
    }
  double acc = 0.0;
  for (double v : g.log_gamma) acc += std::exp(v - mx);
  g.log_sum = mx + std::log(acc);
  g.pi.resize(R + 1);
  for (int64_t x = 0; x <= R; ++x) g.pi[x] = std::exp(g.log_gamma[x] - g.log_sum);
  return g;
}

AnalyticPi analytic_pi(const BirthDeathModel& m, double tail_tol, int64_t max_range) {
  if (!(tail_tol > 0)) throw std::invalid_argument("tail tolerance must be positive");
  const int64_t window = 32;
  for (int64_t R = 64; R <= max_range; R *= 2) {
    GammaProfile g = gamma_profile(m, R);

    // geometric majorant: ratio < 1 and nonincreasing across the window
    double q = m.birth(R) / m.death(R + 1);
    bool certified = q < 1.0;
    double prev = q;
    for (int64_t x = R + 1; certified && x <= R + window; ++x) {
      double rho = m.birth(x) / m.death(x + 1);
      if (!(rho <= prev) || !(rho < 1.0)) certified = false;
      prev = rho;
    }
    if (!certified) continue;

    // sum_{x>R} gamma <= gamma(R) q/(1-q); relative to the retained mass
    double log_tail = g.log_gamma[R] + std::log(q) - std::log1p(-q);
    double tail = std::exp(log_tail - g.log_sum);
    if (tail > tail_tol) continue;

    AnalyticPi out;
    out.pi = std::move(g.pi);
    out.radius = R;
    out.log_norm = g.log_sum;
    out.tail_bound = tail;
    return out;
  }
  throw std::runtime_error(
      "no summability certificate: the gamma series never exhibited a decreasing "
      "sub-unit birth/death ratio, so a stationary distribution may not exist");
}

BdBounds bd_bounds(const BirthDeathModel& m, uint32_t alpha, double c, double r) {
  if (alpha < 1) throw std::invalid_argument("weight exponent must be >= 1");
  if (!(c > 0) || !(r > 0)) throw std::invalid_argument("need c > 0 and r > 0");

  BdBounds out;
  out.alpha = alpha;
  out.c = c;
  out.r = r;
  out.eps = c / r;
  out.xmax = 0;
  while (alpha * std::log((double)(out.xmax + 1)) < std::log(r)) ++out.xmax;

  GammaProfile g = gamma_profile(m, out.xmax);
  out.upper = std::move(g.pi);
  double keep = std::max(0.0, 1.0 - out.eps);
  out.lower.resize(out.upper.size());
  for (size_t x = 0; x < out.upper.size(); ++x) out.lower[x] = out.upper[x] * keep;
  return out;
}

double schlogl_hypergeom_norm(const std::array<Rational, 4>& k) {
  for (const auto& ki : k)
    if (ki <= 0) throw std::invalid_argument("rate constants must be positive");
  using C = std::complex<double>;
  const double z = to_double(k[0] / k[1]);
  const C c1 = std::sqrt(C(1.0 - 4.0 * to_double(k[2] / k[0]), 0.0));
  const C c2 = std::sqrt(C(1.0 - 4.0 * to_double(k[3] / k[1]), 0.0));
  const C a1 = -(c1 + 1.0) / 2.0, a2 = (c1 - 1.0) / 2.0;
  const C b1 = -(c2 + 1.0) / 2.0, b2 = (c2 - 1.0) / 2.0;

  std::vector<double> terms{1.0};
  C t = 1.0;
  double partial = 1.0;
  const size_t cap = 200000;
  for (size_t n = 0; n < cap; ++n) {
    C d1 = b1 + (double)n, d2 = b2 + (double)n;
    if (std::abs(d1) < 1e-12 || std::abs(d2) < 1e-12)
      throw std::runtime_error("hypergeometric denominator parameter hits zero");
    t *= (a1 + (double)n) * (a2 + (double)n) / (d1 * d2) * z / (double)(n + 1);
    if (std::abs(t.imag()) > 1e-6 * (1.0 + std::abs(t.real())))
      throw std::runtime_error("hypergeometric terms drifted off the real axis");
    terms.push_back(t.real());
    partial += t.real();
    if (n > 10 && std::abs(t) < 1e-18 * std::abs(partial)) break;
    if (n + 1 == cap)
      throw std::runtime_error("hypergeometric series did not converge");
  }

  double backward = 0.0;
  for (size_t i = terms.size(); i-- > 0;) backward += terms[i];
  if (std::abs(partial - backward) > 1e-12 * std::abs(backward))
    throw std::runtime_error("hypergeometric summation orders disagree");
  return backward;
}

}  // namespace cmeb
