#pragma once

#include <functional>
#include <map>
#include <optional>

#include "cmeb/linprog.hpp"
#include "cmeb/model.hpp"

namespace cmeb {

// Norm-like weight w with a certified moment bound <w> <= c. Finiteness of the
// sublevel sets is guaranteed structurally: every coefficient of w must be
// nonnegative and every axis must carry a pure-power term c_i x_i^{p_i} with
// c_i > 0, which yields the enumeration box x_i <= (r/c_i)^{1/p_i}.
struct WeightSpec {
  Polynomial w;
  double c = 0;

  // (a.x)^p expanded; a must have a positive entry per axis
  static WeightSpec power_form(const std::vector<int64_t>& a, uint32_t p, double c);
};

// Throws unless w passes the structural norm-like check; returns per-axis
// (exponent, coefficient) of the pure-power terms.
std::vector<std::pair<uint32_t, double>> weight_axis_powers(const Polynomial& w);

// S_r = {x : w(x) < r} (strict, exact rational comparison), graded-lex order;
// N_r = states whose stationarity equation involves only states inside S_r.
struct Truncation {
  double r = 0;
  std::vector<State> states;       // S_r
  std::vector<size_t> interior;    // positions of N_r within states
  std::map<State, size_t> index;

  bool contains(const State& x) const { return index.count(x) != 0; }
};

Truncation build_truncation(const ReactionNetwork& net, const WeightSpec& ws, double r,
                            size_t state_cap = 2000000);

// The LP feasible set over variables pi^r(x), x in S_r:
//   stationarity rows for x in N_r, mass window max(0, 1-eps) <= sum pi <= 1,
//   tail row sum w(x) pi(x) <= c, and box bounds 0 <= pi <= 1.
struct TruncationPolytope {
  LinearProgram lp;
  Truncation trunc;
  double c = 0, eps = 0;     // eps = c/r
  bool informative = true;   // eps < 1; otherwise the mass floor clamps to 0
  size_t mass_row = 0, tail_row = 0;
  std::vector<size_t> stationarity_rows;  // aligned with trunc.interior
  std::vector<double> exit_rates;         // q(x) per state
  std::vector<double> weights;            // w(x) per state
};

TruncationPolytope build_polytope(const ReactionNetwork& net, const Truncation& trunc,
                                  const WeightSpec& ws);

enum class DecisionScaling { None, ByExitRate, ByWeight };

struct StateBoundOptions {
  ToleranceConfig tol;
  DecisionScaling scaling = DecisionScaling::ByExitRate;
  size_t threads = 1;
  size_t state_cap = 2000000;
};

// Substitutes pi~(x) = s(x) pi(x) with s = exit rate or weight (1 wherever the
// scale vanishes); shrinks the coefficient spread without changing the
// feasible set. unscale maps a scaled point back to probabilities.
struct ScaledPolytope {
  TruncationPolytope tp;
  std::vector<double> scale;

  std::vector<double> unscale(const std::vector<double>& scaled) const;
};

ScaledPolytope scale_decision_variables(const TruncationPolytope& tp, DecisionScaling mode);

// Bounds on the restricted average sum_{S_r} f pi, plus the extension to the
// full <f> via c * sup_{x notin S_r} |f(x)|/w(x) when that supremum is
// computable from the weight structure (every term of f must satisfy
// sum_i beta_i / p_i <= 1) or supplied by the caller.
struct AverageBounds {
  double lower = -kInf, upper = kInf;          // restricted average
  double lower_ext = -kInf, upper_ext = kInf;  // valid for the full average
  double sup_ratio = kInf;                     // sup |f|/w outside S_r
  bool lower_one_sided = false;  // f >= 0 outside S_r, so lower <= <f> directly
  bool upper_one_sided = false;  // f <= 0 outside S_r
  SolveStatus lower_status = SolveStatus::NumericalFailure;
  SolveStatus upper_status = SolveStatus::NumericalFailure;
  double eps = 0;
};

AverageBounds bound_average(const ReactionNetwork& net, const WeightSpec& ws, double r,
                            const Polynomial& f, const StateBoundOptions& opts = {},
                            std::optional<double> user_sup_ratio = std::nullopt);

// Per-state envelope from 2|S_r| indicator LPs over one shared system. Solver
// failures degrade conservatively: a failed lower bound reports 0, a failed
// upper bound reports 1, and the error certificates absorb them.
struct DistributionBounds {
  Truncation trunc;
  double c = 0, r = 0, eps = 0;
  bool informative = true;
  std::vector<double> lower, upper;
  std::vector<SolveStatus> lower_status, upper_status;
  double eps_lower = 1;  // 1 - sum lower
  double eps_upper = 1;  // max(sum upper - 1 + eps, eps)
};

DistributionBounds bound_distribution(const ReactionNetwork& net, const WeightSpec& ws,
                                      double r, const StateBoundOptions& opts = {});

// Marginal bounds over the cells of a state partition; cells are the distinct
// labels over S_r. The upper bounds carry the tail caveat: the true marginal
// is at most upper + eps.
struct MarginalBounds {
  std::vector<int64_t> cells;  // sorted labels with A_i intersecting S_r
  std::vector<double> lower, upper;
  std::vector<SolveStatus> lower_status, upper_status;
  double eps = 0;
  double eps_lower = 1, eps_upper = 1;
};

MarginalBounds bound_marginal(const ReactionNetwork& net, const WeightSpec& ws, double r,
                              const std::function<int64_t(const State&)>& label,
                              const StateBoundOptions& opts = {});
MarginalBounds bound_marginal(const ReactionNetwork& net, const WeightSpec& ws, double r,
                              size_t axis, const StateBoundOptions& opts = {});

// l^r(x) > tol_pos at a solved state forces every stationary solution in
// P_{w,c} to charge x, which certifies uniqueness. The converse direction is
// out of reach at finite r, so the negative answer is only "inconclusive".
struct UniquenessVerdict {
  bool unique_certified = false;
  std::optional<State> witness;
  double mass = 0;  // the certifying lower bound
};

UniquenessVerdict uniqueness_test(const DistributionBounds& db, double tol_pos = 1e-10);

// Optimal point of sup pi^r(x) over the polytope: a finite measure with mass
// in [1-eps, 1] approximating the ergodic distribution whose class contains x.
struct ErgodicCandidate {
  std::vector<State> states;
  std::vector<double> pi;
  std::vector<size_t> support;  // indices with pi above the reporting floor
  SolveStatus status = SolveStatus::NumericalFailure;
  double mass = 0;
};

ErgodicCandidate ergodic_candidate(const ReactionNetwork& net, const WeightSpec& ws,
                                   double r, const State& x,
                                   const StateBoundOptions& opts = {});

}  // namespace cmeb
