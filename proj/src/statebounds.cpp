#include "cmeb/statebounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace cmeb {

namespace {

// graded order, ties broken by higher leading entries, as in MonomialBasis
bool state_before(const State& a, const State& b) {
  int64_t sa = std::accumulate(a.begin(), a.end(), int64_t(0));
  int64_t sb = std::accumulate(b.begin(), b.end(), int64_t(0));
  if (sa != sb) return sa < sb;
  return a > b;
}

}  // namespace

WeightSpec WeightSpec::power_form(const std::vector<int64_t>& a, uint32_t p, double c) {
  if (a.empty()) throw std::invalid_argument("weight needs at least one species");
  if (p == 0) throw std::invalid_argument("weight exponent must be positive");
  Polynomial base = Polynomial::constant(a.size(), 0);
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] <= 0)
      throw std::invalid_argument("power-form weight needs a positive coefficient per axis");
    MultiIndex e(a.size());
    e.e[i] = 1;
    base = base + Polynomial::monomial(e, Rational((long)a[i]));
  }
  Polynomial w = Polynomial::constant(a.size(), 1);
  for (uint32_t k = 0; k < p; ++k) w = w * base;
  return WeightSpec{std::move(w), c};
}

std::vector<std::pair<uint32_t, double>> weight_axis_powers(const Polynomial& w) {
  const size_t n = w.vars();
  if (w.terms().empty()) throw std::invalid_argument("weight must be nonzero");
  std::vector<std::pair<uint32_t, double>> axis(n, {0, 0.0});
  for (const auto& [beta, coeff] : w.terms()) {
    if (coeff < 0)
      throw std::invalid_argument("weight has a negative coefficient; not norm-like");
    size_t nz = 0, ax = 0;
    for (size_t i = 0; i < n; ++i)
      if (beta.e[i] > 0) {
        ++nz;
        ax = i;
      }
    if (nz == 1 && beta.e[ax] >= axis[ax].first)
      axis[ax] = {beta.e[ax], to_double(coeff)};
  }
  for (size_t i = 0; i < n; ++i)
    if (axis[i].first == 0 || !(axis[i].second > 0))
      throw std::invalid_argument(
          "weight lacks a pure power of species " + std::to_string(i + 1) +
          "; sublevel sets would be unbounded");
  return axis;
}

Truncation build_truncation(const ReactionNetwork& net, const WeightSpec& ws, double r,
                            size_t state_cap) {
  if (ws.w.vars() != net.n()) throw std::invalid_argument("weight arity mismatch");
  auto axis = weight_axis_powers(ws.w);
  const size_t n = net.n();

  std::vector<int64_t> box(n);
  double cells = 1;
  for (size_t i = 0; i < n; ++i) {
    double b = (r > 0) ? std::pow(r / axis[i].second, 1.0 / axis[i].first) : 0.0;
    box[i] = (int64_t)std::floor(b) + 1;
    cells *= (double)(box[i] + 1);
  }
  if (cells > 1e8)
    throw std::runtime_error("truncation enumeration box exceeds 1e8 cells at r = " +
                             std::to_string(r));

  Truncation trunc;
  trunc.r = r;
  const Rational r_exact(r);
  State x(n, 0);
  while (true) {
    if (net.state_valid(x) && ws.w.eval(x) < r_exact) {
      trunc.states.push_back(x);
      if (trunc.states.size() > state_cap)
        throw std::runtime_error("truncation exceeds the state cap (" +
                                 std::to_string(state_cap) + ") at r = " + std::to_string(r));
    }
    size_t i = 0;
    while (i < n && x[i] == box[i]) x[i++] = 0;
    if (i == n) break;
    ++x[i];
  }
  if (trunc.states.empty())
    throw std::invalid_argument("degenerate truncation: no state satisfies w(x) < " +
                                std::to_string(r));

  std::sort(trunc.states.begin(), trunc.states.end(), state_before);
  for (size_t j = 0; j < trunc.states.size(); ++j) trunc.index[trunc.states[j]] = j;

  for (size_t j = 0; j < trunc.states.size(); ++j) {
    bool inside = true;
    for (const State& z : net.incoming_states(trunc.states[j]))
      if (!trunc.contains(z)) {
        inside = false;
        break;
      }
    if (inside) trunc.interior.push_back(j);
  }
  return trunc;
}

TruncationPolytope build_polytope(const ReactionNetwork& net, const Truncation& trunc,
                                  const WeightSpec& ws) {
  if (!(ws.c > 0)) throw std::invalid_argument("tail constant c must be positive");
  const size_t m = trunc.states.size();
  TruncationPolytope tp{LinearProgram(m), trunc, ws.c, ws.c / trunc.r, true, 0, 0, {}, {}, {}};
  tp.informative = tp.eps < 1;

  tp.exit_rates.resize(m);
  tp.weights.resize(m);
  for (size_t j = 0; j < m; ++j) {
    tp.exit_rates[j] = to_double(net.exit_rate(trunc.states[j]));
    tp.weights[j] = to_double(ws.w.eval(trunc.states[j]));
    tp.lp.set_bounds(j, 0.0, 1.0);
  }

  // stationarity: sum_j a_j(x - v_j) pi(x - v_j) = q(x) pi(x) for x interior
  for (size_t pos : trunc.interior) {
    const State& x = trunc.states[pos];
    std::map<size_t, Rational> row;
    for (size_t j = 0; j < net.reaction_count(); ++j) {
      auto v = net.reaction(j).net();
      State z(x);
      bool valid = true;
      for (size_t i = 0; i < z.size(); ++i) {
        z[i] -= v[i];
        if (z[i] < 0) valid = false;
      }
      if (!valid || !net.state_valid(z)) continue;
      Rational a = net.propensity_eval(j, z);
      if (a == 0) continue;
      row[tp.trunc.index.at(z)] += a;
    }
    row[pos] -= net.exit_rate(x);
    std::vector<std::pair<size_t, double>> coeffs;
    for (const auto& [col, val] : row)
      if (val != 0) coeffs.push_back({col, to_double(val)});
    tp.stationarity_rows.push_back(tp.lp.add_equality(std::move(coeffs), 0.0));
  }

  std::vector<std::pair<size_t, double>> mass(m);
  for (size_t j = 0; j < m; ++j) mass[j] = {j, 1.0};
  tp.mass_row = tp.lp.add_range(std::move(mass), std::max(0.0, 1.0 - tp.eps), 1.0);

  std::vector<std::pair<size_t, double>> tail;
  for (size_t j = 0; j < m; ++j)
    if (tp.weights[j] != 0) tail.push_back({j, tp.weights[j]});
  tp.tail_row = tp.lp.add_range(std::move(tail), -kInf, ws.c);
  return tp;
}

std::vector<double> ScaledPolytope::unscale(const std::vector<double>& scaled) const {
  std::vector<double> out(scaled.size());
  for (size_t j = 0; j < scaled.size() && j < scale.size(); ++j)
    out[j] = scaled[j] / scale[j];
  return out;
}

ScaledPolytope scale_decision_variables(const TruncationPolytope& tp, DecisionScaling mode) {
  const size_t m = tp.trunc.states.size();
  ScaledPolytope sp{tp, std::vector<double>(m, 1.0)};
  if (mode == DecisionScaling::None) return sp;
  for (size_t j = 0; j < m; ++j) {
    double s = (mode == DecisionScaling::ByExitRate) ? tp.exit_rates[j] : tp.weights[j];
    sp.scale[j] = (s > 0) ? s : 1.0;
  }

  LinearProgram lp(m, tp.lp.sense());
  for (size_t j = 0; j < m; ++j) lp.set_bounds(j, 0.0, sp.scale[j]);
  for (const auto& row : tp.lp.rows()) {
    std::vector<std::pair<size_t, double>> coeffs = row.coeffs;
    for (auto& [col, val] : coeffs) val /= sp.scale[col];
    lp.add_range(std::move(coeffs), row.lo, row.hi);
  }
  sp.tp.lp = std::move(lp);
  return sp;
}

namespace {

// objective given in probability coordinates; solves on the scaled system
SolveResult solve_scaled(ScaledPolytope& sp, const std::vector<std::pair<size_t, double>>& obj,
                         LinearProgram::Sense sense, const ToleranceConfig& tol,
                         SimplexBasis* warm) {
  sp.tp.lp.clear_objective();
  for (const auto& [j, cj] : obj) sp.tp.lp.set_objective(j, cj / sp.scale[j]);
  sp.tp.lp.set_sense(sense);
  // probability-scale objectives: resolve reduced costs well below the
  // per-state agreement the certificates are reported at
  ToleranceConfig t = tol;
  t.opt = std::min(t.opt, 1e-12);
  SolveResult res = solve_lp(sp.tp.lp, t, warm);
  if (!res.x.empty()) res.x = sp.unscale(res.x);
  return res;
}

ScaledPolytope prepare_system(const ReactionNetwork& net, const WeightSpec& ws, double r,
                              const StateBoundOptions& opts, const char* caller) {
  if (!(r > 0)) throw std::invalid_argument("truncation threshold r must be positive");
  Truncation trunc = build_truncation(net, ws, r, opts.state_cap);
  TruncationPolytope tp = build_polytope(net, trunc, ws);
  ScaledPolytope sp = scale_decision_variables(tp, opts.scaling);

  SolveResult feas = solve_scaled(sp, {}, LinearProgram::Sense::Min, opts.tol, nullptr);
  if (feas.status == SolveStatus::Infeasible)
    throw std::runtime_error(std::string(caller) +
                             ": no stationary solution satisfies <w> <= " +
                             std::to_string(ws.c) + " at r = " + std::to_string(r));
  return sp;
}

}  // namespace

AverageBounds bound_average(const ReactionNetwork& net, const WeightSpec& ws, double r,
                            const Polynomial& f, const StateBoundOptions& opts,
                            std::optional<double> user_sup_ratio) {
  if (f.vars() != net.n()) throw std::invalid_argument("average target arity mismatch");
  ScaledPolytope sp = prepare_system(net, ws, r, opts, "bound_average");

  std::vector<std::pair<size_t, double>> obj;
  for (size_t j = 0; j < sp.tp.trunc.states.size(); ++j) {
    double v = to_double(f.eval(sp.tp.trunc.states[j]));
    if (v != 0) obj.push_back({j, v});
  }

  AverageBounds out;
  out.eps = sp.tp.eps;
  SimplexBasis warm;
  SolveResult lo = solve_scaled(sp, obj, LinearProgram::Sense::Min, opts.tol, &warm);
  out.lower_status = lo.status;
  if (lo.status == SolveStatus::Optimal) out.lower = lo.value;
  SolveResult hi = solve_scaled(sp, obj, LinearProgram::Sense::Max, opts.tol, &warm);
  out.upper_status = hi.status;
  if (hi.status == SolveStatus::Optimal) out.upper = hi.value;

  // tail control: |f(x)|/w(x) <= sum_beta |f_beta| r^{e-1} prod_i c_i^{-b_i/p_i}
  // outside S_r, valid whenever every term has e = sum_i b_i/p_i <= 1
  auto axis = weight_axis_powers(ws.w);
  bool nonneg = true, nonpos = true;
  double sup = 0;
  bool sup_ok = true;
  for (const auto& [beta, coeff] : f.terms()) {
    if (coeff < 0) nonneg = false;
    if (coeff > 0) nonpos = false;
    double e = 0, scale = 1;
    for (size_t i = 0; i < beta.vars(); ++i)
      if (beta.e[i] > 0) {
        e += (double)beta.e[i] / axis[i].first;
        scale *= std::pow(axis[i].second, -(double)beta.e[i] / axis[i].first);
      }
    if (e > 1 + 1e-12) {
      sup_ok = false;
      continue;
    }
    sup += std::abs(to_double(coeff)) * scale * std::pow(r, e - 1.0);
  }
  if (user_sup_ratio)
    out.sup_ratio = *user_sup_ratio;
  else if (sup_ok)
    out.sup_ratio = sup;
  out.lower_one_sided = nonneg;
  out.upper_one_sided = nonpos;

  double slack = ws.c * out.sup_ratio;  // inf when unavailable
  if (out.lower_status == SolveStatus::Optimal)
    out.lower_ext = nonneg ? out.lower : out.lower - slack;
  if (out.upper_status == SolveStatus::Optimal)
    out.upper_ext = nonpos ? out.upper : out.upper + slack;
  return out;
}

namespace {

// one worker's share of the per-state indicator solves
void indicator_worker(ScaledPolytope sp, const StateBoundOptions& opts, size_t first,
                      size_t stride, std::vector<double>& lower, std::vector<double>& upper,
                      std::vector<SolveStatus>& lower_status,
                      std::vector<SolveStatus>& upper_status) {
  SimplexBasis warm;
  for (size_t j = first; j < lower.size(); j += stride) {
    SolveResult lo = solve_scaled(sp, {{j, 1.0}}, LinearProgram::Sense::Min, opts.tol, &warm);
    lower_status[j] = lo.status;
    lower[j] = (lo.status == SolveStatus::Optimal) ? std::clamp(lo.value, 0.0, 1.0) : 0.0;
    SolveResult hi = solve_scaled(sp, {{j, 1.0}}, LinearProgram::Sense::Max, opts.tol, &warm);
    upper_status[j] = hi.status;
    upper[j] = (hi.status == SolveStatus::Optimal) ? std::clamp(hi.value, 0.0, 1.0) : 1.0;
    if (upper[j] < lower[j]) upper[j] = lower[j];
  }
}

}  // namespace

DistributionBounds bound_distribution(const ReactionNetwork& net, const WeightSpec& ws,
                                      double r, const StateBoundOptions& opts) {
  ScaledPolytope sp = prepare_system(net, ws, r, opts, "bound_distribution");
  const size_t m = sp.tp.trunc.states.size();

  DistributionBounds db;
  db.trunc = sp.tp.trunc;
  db.c = ws.c;
  db.r = r;
  db.eps = sp.tp.eps;
  db.informative = sp.tp.informative;
  db.lower.assign(m, 0.0);
  db.upper.assign(m, 1.0);
  db.lower_status.assign(m, SolveStatus::NumericalFailure);
  db.upper_status.assign(m, SolveStatus::NumericalFailure);

  size_t threads = std::max<size_t>(1, std::min(opts.threads, m));
  if (threads == 1) {
    indicator_worker(std::move(sp), opts, 0, 1, db.lower, db.upper, db.lower_status,
                     db.upper_status);
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < threads; ++t)
      pool.emplace_back(indicator_worker, sp, std::cref(opts), t, threads,
                        std::ref(db.lower), std::ref(db.upper), std::ref(db.lower_status),
                        std::ref(db.upper_status));
    for (auto& th : pool) th.join();
  }

  double lmass = std::accumulate(db.lower.begin(), db.lower.end(), 0.0);
  double umass = std::accumulate(db.upper.begin(), db.upper.end(), 0.0);
  db.eps_lower = std::clamp(1.0 - lmass, 0.0, 1.0);
  db.eps_upper = std::max(umass - 1.0 + db.eps, db.eps);
  return db;
}

MarginalBounds bound_marginal(const ReactionNetwork& net, const WeightSpec& ws, double r,
                              const std::function<int64_t(const State&)>& label,
                              const StateBoundOptions& opts) {
  ScaledPolytope sp = prepare_system(net, ws, r, opts, "bound_marginal");
  const size_t m = sp.tp.trunc.states.size();

  std::map<int64_t, std::vector<std::pair<size_t, double>>> cells;
  for (size_t j = 0; j < m; ++j) cells[label(sp.tp.trunc.states[j])].push_back({j, 1.0});

  MarginalBounds mb;
  mb.eps = sp.tp.eps;
  SimplexBasis warm;
  for (auto& [cell, obj] : cells) {
    SolveResult lo = solve_scaled(sp, obj, LinearProgram::Sense::Min, opts.tol, &warm);
    SolveResult hi = solve_scaled(sp, obj, LinearProgram::Sense::Max, opts.tol, &warm);
    mb.cells.push_back(cell);
    mb.lower_status.push_back(lo.status);
    mb.upper_status.push_back(hi.status);
    mb.lower.push_back(lo.status == SolveStatus::Optimal ? std::clamp(lo.value, 0.0, 1.0)
                                                         : 0.0);
    mb.upper.push_back(hi.status == SolveStatus::Optimal ? std::clamp(hi.value, 0.0, 1.0)
                                                         : 1.0);
    if (mb.upper.back() < mb.lower.back()) mb.upper.back() = mb.lower.back();
  }
  double lmass = std::accumulate(mb.lower.begin(), mb.lower.end(), 0.0);
  double umass = std::accumulate(mb.upper.begin(), mb.upper.end(), 0.0);
  mb.eps_lower = std::clamp(1.0 - lmass, 0.0, 1.0);
  mb.eps_upper = std::max(umass - 1.0 + mb.eps, mb.eps);
  return mb;
}

MarginalBounds bound_marginal(const ReactionNetwork& net, const WeightSpec& ws, double r,
                              size_t axis, const StateBoundOptions& opts) {
  if (axis >= net.n()) throw std::invalid_argument("marginal axis out of range");
  return bound_marginal(
      net, ws, r, [axis](const State& x) { return x[axis]; }, opts);
}

UniquenessVerdict uniqueness_test(const DistributionBounds& db, double tol_pos) {
  UniquenessVerdict v;
  for (size_t j = 0; j < db.lower.size(); ++j) {
    if (db.lower_status[j] != SolveStatus::Optimal) continue;
    if (db.lower[j] > tol_pos && db.lower[j] > v.mass) {
      v.unique_certified = true;
      v.witness = db.trunc.states[j];
      v.mass = db.lower[j];
    }
  }
  return v;
}

ErgodicCandidate ergodic_candidate(const ReactionNetwork& net, const WeightSpec& ws,
                                   double r, const State& x,
                                   const StateBoundOptions& opts) {
  ScaledPolytope sp = prepare_system(net, ws, r, opts, "ergodic_candidate");
  auto it = sp.tp.trunc.index.find(x);
  if (it == sp.tp.trunc.index.end())
    throw std::invalid_argument("seed state lies outside the truncation");

  ErgodicCandidate ec;
  ec.states = sp.tp.trunc.states;
  SolveResult res =
      solve_scaled(sp, {{it->second, 1.0}}, LinearProgram::Sense::Max, opts.tol, nullptr);
  ec.status = res.status;
  if (res.status == SolveStatus::Optimal) {
    ec.pi = res.x;
    for (size_t j = 0; j < ec.pi.size(); ++j) {
      ec.pi[j] = std::max(0.0, ec.pi[j]);
      ec.mass += ec.pi[j];
      if (ec.pi[j] > 1e-10) ec.support.push_back(j);
    }
  }
  return ec;
}

}  // namespace cmeb
