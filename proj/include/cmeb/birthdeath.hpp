#pragma once

#include <array>
#include <functional>

#include "cmeb/model.hpp"

namespace cmeb {

// One-species chain with unit jumps: birth rate a_+(x) >= 0 and death rate
// a_-(x) > 0 for x >= 1. Rates are validated lazily, on the enumerated range.
struct BirthDeathModel {
  std::function<double(int64_t)> birth;
  std::function<double(int64_t)> death;

  // Requires a one-species network whose reactions all have net change +-1;
  // birth/death are the summed propensities of the up/down reactions.
  static BirthDeathModel from_network(const ReactionNetwork& net);
};

// gamma(0) = 1, gamma(x) = prod_{z=1..x} a_+(z-1)/a_-(z), kept as logarithms;
// pi is gamma normalized over the range. A zero birth rate makes every later
// gamma zero (log = -inf); a zero death rate is an error.
struct GammaProfile {
  std::vector<double> log_gamma;  // x = 0..R
  std::vector<double> pi;
  double log_sum = 0;  // log sum_{x=0..R} gamma(x)
  int64_t mode = 0;    // first argmax of gamma
};

GammaProfile gamma_profile(const BirthDeathModel& m, int64_t R);

// pi(x) = gamma(x)/sum gamma over an adaptively extended range; the neglected
// mass is certified below tail_tol by a geometric majorant, exhibited once the
// ratio a_+(x)/a_-(x+1) is < 1 and nonincreasing over a trailing window.
// Throws when no such certificate appears up to max_range (the series may not
// be summable).
struct AnalyticPi {
  std::vector<double> pi;  // x = 0..radius
  int64_t radius = 0;
  double log_norm = 0;    // log sum_{x=0..radius} gamma(x)
  double tail_bound = 0;  // certified bound on the neglected mass

  double operator()(int64_t x) const {
    return (x >= 0 && x < (int64_t)pi.size()) ? pi[x] : 0.0;
  }
};

AnalyticPi analytic_pi(const BirthDeathModel& m, double tail_tol = 1e-12,
                       int64_t max_range = int64_t(1) << 20);

// Per-state envelope on the truncation S_r = {x : x^alpha < r} given a
// certified bound c on <x^alpha>:
//   u^r_x = gamma(x)/sum_{S_r} gamma,  l^r_x = u^r_x max(0, 1 - eps),
// with tail bound eps = c/r. The lower-bound error ||pi - l^r|| equals
// min(eps, 1); the upper-bound error is the actual tail mass, at most eps.
struct BdBounds {
  uint32_t alpha = 1;
  double c = 0, r = 0, eps = 0;
  int64_t xmax = 0;  // S_r = {0..xmax}
  std::vector<double> lower, upper;
};

BdBounds bd_bounds(const BirthDeathModel& m, uint32_t alpha, double c, double r);

// Closed-form normalizer 1/pi(0) of the one-species autocatalytic network
// with rates k = (k1..k4): a generalized hypergeometric 2F2 series evaluated
// by direct partial sums in two orders that must agree to 1e-12. Used as an
// independent cross-check of the gamma series.
double schlogl_hypergeom_norm(const std::array<Rational, 4>& k);

}  // namespace cmeb
