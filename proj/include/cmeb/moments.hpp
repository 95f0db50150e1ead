#pragma once

#include <array>
#include <optional>

#include "cmeb/conic.hpp"
#include "cmeb/polyalg.hpp"

namespace cmeb {

// Order-d spectrahedral outer approximation of the attainable rational moment
// vectors z_beta = <x^beta / o>, |beta| <= d:
//   normalization  sum_beta o_beta z_beta = 1,
//   moment equations  sum_beta (g_alpha)_beta z_beta = 0, 1 <= |alpha| <= d - d_a + 1,
//   n+1 PSD localizing blocks.
// The program is expressed in scaled variables zhat with z = z_mult .* zhat,
// z_mult_beta = prod_i sigma_i^beta_i; the PSD blocks are congruence-invariant
// so their coefficients stay 0/1, and every equality row is max-abs normalized.
struct Spectrahedron {
  uint32_t d = 0;
  MonomialBasis basis;
  ConicProgram program;
  size_t normalization_row = 0;
  std::vector<MultiIndex> equations;
  std::vector<double> sigma;   // per species
  std::vector<double> z_mult;  // per basis element
};

// Requires d >= 1, d >= d_o and d >= d_a - 1.
Spectrahedron build_spectrahedron(const ReactionNetwork& net, uint32_t d,
                                  const std::vector<double>& sigma = {});

struct MomentBound {
  Polynomial f;                      // the bound brackets <f/o>
  std::optional<MultiIndex> alpha;   // set when f = o * x^alpha (power moment)
  uint32_t d = 0;
  double lower = -kInf, upper = kInf;
  SolveStatus lower_status = SolveStatus::NumericalFailure;
  SolveStatus upper_status = SolveStatus::NumericalFailure;
  SolveResult lower_cert, upper_cert;
  std::vector<double> sigma;

  bool valid() const {
    return lower_status == SolveStatus::Optimal && upper_status == SolveStatus::Optimal;
  }
};

struct MomentOptions {
  ToleranceConfig tol;
  SdpOptions sdp;
  bool scale = true;             // estimate per-species sigma from a cheap probe
  std::vector<double> sigma;     // overrides the probe when non-empty
};

// Objective for <f/o> in the scaled variables of sp; used when exporting the
// program instead of solving it.
void set_moment_objective(ConicProgram& cp, const Spectrahedron& sp, const Polynomial& f);

// Bounds on <f/o> over E^d; requires deg f <= d. Solver failures leave the
// corresponding side at +-inf with the status attached.
MomentBound bound_moment(const ReactionNetwork& net, uint32_t d, const Polynomial& f,
                         const MomentOptions& opts = {});

// Bounds on the power moment <x^alpha> via f = o * x^alpha;
// requires |alpha| <= d - d_o.
MomentBound bound_power_moment(const ReactionNetwork& net, uint32_t d,
                               const MultiIndex& alpha, const MomentOptions& opts = {});

// Closed-form order-3 bounds for the one-species autocatalytic network with
// propensities k1 x(x-1), k2 x(x-1)(x-2), k3, k4 x:
//   u1 = r4, the rightmost root of b1 x - b2 x^2 + b3 x^3 - b4 x^4,
//   u2 = r2_plus(r4).
struct SchloglE3 {
  std::array<double, 4> b{};  // b1 = k3, b2 = k1+2k2+k4, b3 = k1+3k2, b4 = k2
  double r4 = 0, u1 = 0, u2 = 0;

  double r2_plus(double x) const;
  double r2_minus(double x) const;
};

// Requires the branch b3 >= 2 sqrt(b2 b4); throws std::domain_error otherwise.
SchloglE3 analytic_schlogl_e3(const std::array<Rational, 4>& k);

struct Interval {
  double lo = -kInf, hi = kInf;
  bool bounded() const { return lo > -kInf && hi < kInf; }
};

struct StatsIntervals {
  Interval variance, cv, skewness;
};

// Interval enclosures of variance, coefficient of variation and skewness from
// bounds on <x>, <x^2>, <x^3> of one species, with outward rounding. Sides
// whose interval division is undefined (denominator lower bound <= 0) come
// back unbounded.
StatsIntervals stats_intervals(const MomentBound& m1, const MomentBound& m2,
                               const MomentBound& m3);

struct HierarchyRow {
  MultiIndex alpha;
  uint32_t d;
  MomentBound bound;
};

// Power-moment bounds for each target at each order, deterministic order.
std::vector<HierarchyRow> moment_hierarchy(const ReactionNetwork& net,
                                           const std::vector<MultiIndex>& targets,
                                           const std::vector<uint32_t>& ds,
                                           const MomentOptions& opts = {});

}  // namespace cmeb
