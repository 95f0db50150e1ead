#include "cmeb/linprog.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmeb {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterationLimit: return "IterationLimit";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

LinearProgram::LinearProgram(size_t num_vars, Sense sense)
    : n_(num_vars), sense_(sense), c_(num_vars, 0.0), lo_(num_vars, 0.0),
      hi_(num_vars, kInf), names_(num_vars) {}

void LinearProgram::check_coeffs(const std::vector<std::pair<size_t, double>>& coeffs) const {
  for (const auto& [j, a] : coeffs) {
    if (j >= n_) throw std::invalid_argument("variable index out of range");
    if (!std::isfinite(a)) throw std::invalid_argument("non-finite constraint coefficient");
  }
}

void LinearProgram::set_objective(size_t var, double coeff) {
  if (var >= n_) throw std::invalid_argument("variable index out of range");
  if (!std::isfinite(coeff)) throw std::invalid_argument("non-finite objective coefficient");
  c_[var] = coeff;
}

void LinearProgram::clear_objective() { std::fill(c_.begin(), c_.end(), 0.0); }

size_t LinearProgram::add_equality(std::vector<std::pair<size_t, double>> coeffs, double rhs) {
  return add_range(std::move(coeffs), rhs, rhs);
}

size_t LinearProgram::add_range(std::vector<std::pair<size_t, double>> coeffs, double lo,
                                double hi) {
  check_coeffs(coeffs);
  if (std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw std::invalid_argument("bad row bounds");
  rows_.push_back(Row{std::move(coeffs), lo, hi});
  return rows_.size() - 1;
}

void LinearProgram::set_bounds(size_t var, double lo, double hi) {
  if (var >= n_) throw std::invalid_argument("variable index out of range");
  if (std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw std::invalid_argument("bad variable bounds");
  lo_[var] = lo;
  hi_[var] = hi;
}

void LinearProgram::set_var_name(size_t var, std::string name) {
  names_.at(var) = std::move(name);
}

namespace {

enum VStat : int8_t { kAtLower = 0, kAtUpper = 1, kBasic = 2, kFreeZero = 3 };

// Bounded-variable revised primal simplex over A x - z = 0 with z the row
// logicals. The basis is kept as a sparse LU factorization plus a
// product-form eta file, refactorized periodically.
struct Engine {
  size_t n = 0, m = 0, N = 0;
  std::vector<std::vector<std::pair<size_t, double>>> cols;  // structural, scaled
  std::vector<double> lo, hi;                                // length N
  std::vector<double> rscale;

  std::vector<int8_t> stat;
  std::vector<size_t> basis;
  std::vector<double> x;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  struct Eta {
    size_t r;
    Eigen::VectorXd w;
  };
  std::vector<Eta> etas;
  bool factor_ok = false;

  static constexpr size_t kRefactorEvery = 64;
  static constexpr double kPivotTol = 1e-9;

  void load(const LinearProgram& lp) {
    n = lp.num_vars();
    m = lp.num_rows();
    N = n + m;
    cols.assign(n, {});
    lo.assign(N, 0.0);
    hi.assign(N, 0.0);
    rscale.assign(m, 1.0);
    for (size_t i = 0; i < m; ++i) {
      double mx = 0;
      for (const auto& [j, a] : lp.rows()[i].coeffs) mx = std::max(mx, std::abs(a));
      rscale[i] = mx > 0 ? 1.0 / mx : 1.0;
    }
    for (size_t i = 0; i < m; ++i)
      for (const auto& [j, a] : lp.rows()[i].coeffs)
        if (a != 0) cols[j].push_back({i, a * rscale[i]});
    for (size_t j = 0; j < n; ++j) {
      lo[j] = lp.var_lo(j);
      hi[j] = lp.var_hi(j);
    }
    for (size_t i = 0; i < m; ++i) {
      lo[n + i] = lp.rows()[i].lo * rscale[i];
      hi[n + i] = lp.rows()[i].hi * rscale[i];
    }
  }

  void reset_basis() {
    stat.assign(N, kAtLower);
    basis.resize(m);
    for (size_t j = 0; j < N; ++j) {
      if (lo[j] > -kInf)
        stat[j] = kAtLower;
      else if (hi[j] < kInf)
        stat[j] = kAtUpper;
      else
        stat[j] = kFreeZero;
    }
    for (size_t i = 0; i < m; ++i) {
      basis[i] = n + i;
      stat[n + i] = kBasic;
    }
  }

  double nb_value(size_t j) const {
    if (stat[j] == kAtLower) return lo[j];
    if (stat[j] == kAtUpper) return hi[j];
    return 0.0;
  }

  // column j of [A | -I] into dense v (must be zeroed by caller afterwards)
  void scatter_col(size_t j, Eigen::VectorXd& v) const {
    if (j < n)
      for (const auto& [i, a] : cols[j]) v[static_cast<Eigen::Index>(i)] += a;
    else
      v[static_cast<Eigen::Index>(j - n)] -= 1.0;
  }

  bool factorize() {
    if (m == 0) {
      etas.clear();
      factor_ok = true;
      return true;
    }
    Eigen::SparseMatrix<double> B(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    std::vector<Eigen::Triplet<double>> trip;
    for (size_t p = 0; p < m; ++p) {
      size_t j = basis[p];
      if (j < n)
        for (const auto& [i, a] : cols[j])
          trip.emplace_back(static_cast<int>(i), static_cast<int>(p), a);
      else
        trip.emplace_back(static_cast<int>(j - n), static_cast<int>(p), -1.0);
    }
    B.setFromTriplets(trip.begin(), trip.end());
    lu.compute(B);
    etas.clear();
    factor_ok = lu.info() == Eigen::Success;
    return factor_ok;
  }

  Eigen::VectorXd ftran(const Eigen::VectorXd& v) const {
    if (m == 0) return v;
    Eigen::VectorXd u = lu.solve(v);
    for (const auto& e : etas) {
      Eigen::Index r = static_cast<Eigen::Index>(e.r);
      double t = u[r] / e.w[r];
      if (t != 0.0) u -= t * e.w;
      u[r] = t;
    }
    return u;
  }

  Eigen::VectorXd btran(const Eigen::VectorXd& v) {
    if (m == 0) return v;
    Eigen::VectorXd z = v;
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      Eigen::Index r = static_cast<Eigen::Index>(it->r);
      double zr = z[r];
      double s = it->w.dot(z) - it->w[r] * zr;
      z[r] = (zr - s) / it->w[r];
    }
    return lu.adjoint().solve(z);
  }

  void compute_basic_values() {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (size_t j = 0; j < N; ++j) {
      if (stat[j] == kBasic) continue;
      double v = nb_value(j);
      x[j] = v;
      if (v != 0.0) {
        if (j < n)
          for (const auto& [i, a] : cols[j]) rhs[static_cast<Eigen::Index>(i)] -= a * v;
        else
          rhs[static_cast<Eigen::Index>(j - n)] += v;
      }
    }
    Eigen::VectorXd xb = ftran(rhs);
    for (size_t p = 0; p < m; ++p) x[basis[p]] = xb[static_cast<Eigen::Index>(p)];
  }

  double infeasibility(double ftol) const {
    double s = 0;
    for (size_t p = 0; p < m; ++p) {
      size_t j = basis[p];
      if (x[j] < lo[j] - ftol) s += lo[j] - x[j];
      if (x[j] > hi[j] + ftol) s += x[j] - hi[j];
    }
    return s;
  }
};

struct PivotChoice {
  size_t q = SIZE_MAX;
  double d = 0;
  int sigma = 1;
};

}  // namespace

struct SimplexBasis::Impl {
  Engine eng;
  bool valid = false;
  size_t nvars = 0, nrows = 0;
};

SimplexBasis::SimplexBasis() : impl(new Impl) {}
SimplexBasis::~SimplexBasis() = default;
SimplexBasis::SimplexBasis(SimplexBasis&&) noexcept = default;
SimplexBasis& SimplexBasis::operator=(SimplexBasis&&) noexcept = default;

namespace {

SolveResult finish(const LinearProgram& lp, const Engine& eng, SolveStatus status,
                   const Eigen::VectorXd* y, size_t iters) {
  SolveResult res;
  res.status = status;
  res.iterations = iters;
  res.x.assign(lp.num_vars(), 0.0);
  for (size_t j = 0; j < lp.num_vars(); ++j) res.x[j] = eng.x[j];
  double val = 0;
  for (size_t j = 0; j < lp.num_vars(); ++j) val += lp.objective()[j] * res.x[j];
  res.value = val;

  double pviol = 0;
  for (size_t i = 0; i < lp.num_rows(); ++i) {
    double act = 0;
    for (const auto& [j, a] : lp.rows()[i].coeffs) act += a * res.x[j];
    if (lp.rows()[i].lo > -kInf) pviol = std::max(pviol, (lp.rows()[i].lo - act) * eng.rscale[i]);
    if (lp.rows()[i].hi < kInf) pviol = std::max(pviol, (act - lp.rows()[i].hi) * eng.rscale[i]);
  }
  for (size_t j = 0; j < lp.num_vars(); ++j) {
    pviol = std::max(pviol, lp.var_lo(j) - res.x[j]);
    pviol = std::max(pviol, res.x[j] - lp.var_hi(j));
  }
  res.primal_residual = pviol;

  if (y) {
    res.duals.assign(lp.num_rows(), 0.0);
    double flip = lp.sense() == LinearProgram::Sense::Max ? -1.0 : 1.0;
    for (size_t i = 0; i < lp.num_rows(); ++i)
      res.duals[i] = flip * (*y)[static_cast<Eigen::Index>(i)] * eng.rscale[i];
  }
  return res;
}

}  // namespace

SolveResult solve_lp(const LinearProgram& lp, const ToleranceConfig& tol, SimplexBasis* warm) {
  for (size_t j = 0; j < lp.num_vars(); ++j)
    if (lp.var_lo(j) > lp.var_hi(j)) {
      SolveResult r;
      r.status = SolveStatus::Infeasible;
      return r;
    }

  SimplexBasis local;
  SimplexBasis::Impl& st = warm ? *warm->impl : *local.impl;
  Engine& eng = st.eng;

  bool reuse = st.valid && st.eng.factor_ok && st.nvars == lp.num_vars() &&
               st.nrows == lp.num_rows();
  if (!reuse) {
    eng.load(lp);
    eng.reset_basis();
    st.nvars = lp.num_vars();
    st.nrows = lp.num_rows();
    st.valid = true;
    if (!eng.factorize()) {
      SolveResult r;
      r.status = SolveStatus::NumericalFailure;
      return r;
    }
  }
  eng.x.assign(eng.N, 0.0);
  eng.compute_basic_values();

  const size_t n = eng.n, m = eng.m, N = eng.N;
  const double ftol = tol.feas, otol = tol.opt;

  // internal minimization costs
  std::vector<double> cost(N, 0.0);
  double flip = lp.sense() == LinearProgram::Sense::Max ? -1.0 : 1.0;
  for (size_t j = 0; j < n; ++j) cost[j] = flip * lp.objective()[j];

  std::vector<double> pcost(N, 0.0);  // phase-1 working costs
  Eigen::VectorXd y(static_cast<Eigen::Index>(m)), colbuf(static_cast<Eigen::Index>(m));
  size_t iters = 0;
  size_t stall = 0;
  bool bland = false;
  bool recovered = false;
  const size_t stall_threshold = 100;

  auto reduced_cost = [&](const std::vector<double>& c, size_t j) {
    double d = c[j];
    if (j < n)
      for (const auto& [i, a] : eng.cols[j]) d -= y[static_cast<Eigen::Index>(i)] * a;
    else
      d += y[static_cast<Eigen::Index>(j - n)];
    return d;
  };

restart:
  for (int phase = 1; phase <= 2; ++phase) {
    if (phase == 2 && eng.infeasibility(ftol) > ftol) {
      // phase 1 stopped without reaching feasibility
      Eigen::VectorXd cb(static_cast<Eigen::Index>(m));
      for (size_t p = 0; p < m; ++p) cb[static_cast<Eigen::Index>(p)] = pcost[eng.basis[p]];
      Eigen::VectorXd yf = eng.btran(cb);
      SolveResult res = finish(lp, eng, SolveStatus::Infeasible, nullptr, iters);
      res.ray.assign(m, 0.0);
      for (size_t i = 0; i < m; ++i) res.ray[i] = yf[static_cast<Eigen::Index>(i)] * eng.rscale[i];
      return res;
    }

    while (true) {
      if (++iters > tol.max_iter) {
        SolveResult r = finish(lp, eng, SolveStatus::IterationLimit, nullptr, iters);
        return r;
      }

      const std::vector<double>* c = &cost;
      if (phase == 1) {
        bool any_infeas = false;
        std::fill(pcost.begin(), pcost.end(), 0.0);
        for (size_t p = 0; p < m; ++p) {
          size_t j = eng.basis[p];
          if (eng.x[j] < eng.lo[j] - ftol) {
            pcost[j] = -1;
            any_infeas = true;
          } else if (eng.x[j] > eng.hi[j] + ftol) {
            pcost[j] = 1;
            any_infeas = true;
          }
        }
        if (!any_infeas) break;  // feasible: proceed to phase 2
        c = &pcost;
      }

      Eigen::VectorXd cb(static_cast<Eigen::Index>(m));
      for (size_t p = 0; p < m; ++p) cb[static_cast<Eigen::Index>(p)] = (*c)[eng.basis[p]];
      y = eng.btran(cb);

      PivotChoice pick;
      for (size_t j = 0; j < N; ++j) {
        if (eng.stat[j] == kBasic) continue;
        if (eng.lo[j] == eng.hi[j]) continue;  // fixed
        double d = reduced_cost(*c, j);
        double viol = 0;
        int sigma = 1;
        if (eng.stat[j] == kAtLower && d < -otol) {
          viol = -d;
          sigma = 1;
        } else if (eng.stat[j] == kAtUpper && d > otol) {
          viol = d;
          sigma = -1;
        } else if (eng.stat[j] == kFreeZero && std::abs(d) > otol) {
          viol = std::abs(d);
          sigma = d < 0 ? 1 : -1;
        } else {
          continue;
        }
        if (bland) {
          pick = {j, d, sigma};
          break;
        }
        if (viol > std::abs(pick.d)) pick = {j, (sigma == 1 ? -viol : viol), sigma};
      }

      if (pick.q == SIZE_MAX) {
        if (phase == 1) {
          // no improving direction while infeasible: exit to infeasibility check
          break;
        }
        // drop the accumulated eta error from the reported vertex
        if (!eng.etas.empty() && eng.factorize()) {
          eng.compute_basic_values();
          Eigen::VectorXd cb2(static_cast<Eigen::Index>(m));
          for (size_t p = 0; p < m; ++p) cb2[static_cast<Eigen::Index>(p)] = cost[eng.basis[p]];
          y = eng.btran(cb2);
        }
        Eigen::VectorXd yfinal = y;
        SolveResult res = finish(lp, eng, SolveStatus::Optimal, &yfinal, iters);
        double dviol = 0;
        for (size_t j = 0; j < N; ++j) {
          if (eng.stat[j] == kBasic || eng.lo[j] == eng.hi[j]) continue;
          double d = reduced_cost(cost, j);
          if (eng.stat[j] == kAtLower) dviol = std::max(dviol, -d);
          else if (eng.stat[j] == kAtUpper) dviol = std::max(dviol, d);
          else dviol = std::max(dviol, std::abs(d));
        }
        res.dual_residual = dviol;
        return res;
      }

      size_t q = pick.q;
      int sigma = pick.sigma;
      colbuf.setZero();
      eng.scatter_col(q, colbuf);
      Eigen::VectorXd w = eng.ftran(colbuf);

      // ratio test: x_q moves by sigma*t, basic p changes by -sigma*w_p*t
      auto step_to = [&](size_t p, double& t, double& target) {
        double delta = -sigma * w[static_cast<Eigen::Index>(p)];
        if (std::abs(delta) <= Engine::kPivotTol) return false;
        size_t j = eng.basis[p];
        if (delta > 0) {  // moving up
          target = (eng.x[j] < eng.lo[j] - ftol) ? eng.lo[j] : eng.hi[j];
          if (target == kInf || eng.x[j] > eng.hi[j] + ftol) return false;
        } else {  // moving down
          target = (eng.x[j] > eng.hi[j] + ftol) ? eng.hi[j] : eng.lo[j];
          if (target == -kInf || eng.x[j] < eng.lo[j] - ftol) return false;
        }
        t = std::max(0.0, (target - eng.x[j]) / delta);
        return true;
      };

      double tmax = kInf;
      size_t leave_pos = SIZE_MAX;
      double leave_to = 0;  // bound the leaving variable lands on
      if (eng.lo[q] > -kInf && eng.hi[q] < kInf) tmax = eng.hi[q] - eng.lo[q];
      if (bland) {
        // strict smallest step, lowest index on ties
        for (size_t p = 0; p < m; ++p) {
          double t, target;
          if (!step_to(p, t, target)) continue;
          if (t < tmax - 1e-12 || (std::abs(t - tmax) <= 1e-12 &&
                                   (leave_pos == SIZE_MAX || eng.basis[p] < eng.basis[leave_pos]))) {
            tmax = t;
            leave_pos = p;
            leave_to = target;
          }
        }
      } else {
        // two-pass Harris: relax each breakpoint by the feasibility tolerance,
        // then take the largest pivot among steps within the relaxed limit
        double limit = tmax;
        for (size_t p = 0; p < m; ++p) {
          double t, target;
          if (!step_to(p, t, target)) continue;
          double delta = std::abs(w[static_cast<Eigen::Index>(p)]);
          limit = std::min(limit, t + ftol / delta);
        }
        double best = 0;
        for (size_t p = 0; p < m; ++p) {
          double t, target;
          if (!step_to(p, t, target)) continue;
          if (t > limit) continue;
          double delta = std::abs(w[static_cast<Eigen::Index>(p)]);
          if (delta > best) {
            best = delta;
            tmax = t;
            leave_pos = p;
            leave_to = target;
          }
        }
        if (leave_pos == SIZE_MAX) tmax = limit;  // only the entering bound binds
      }

      if (tmax == kInf) {
        if (phase == 1) {
          SolveResult r = finish(lp, eng, SolveStatus::NumericalFailure, nullptr, iters);
          return r;
        }
        SolveResult res = finish(lp, eng, SolveStatus::Unbounded, nullptr, iters);
        res.ray.assign(n, 0.0);
        if (q < n) res.ray[q] = sigma;
        for (size_t p = 0; p < m; ++p)
          if (eng.basis[p] < n)
            res.ray[eng.basis[p]] = -sigma * w[static_cast<Eigen::Index>(p)];
        return res;
      }

      stall = (tmax <= 1e-10) ? stall + 1 : 0;
      if (stall > stall_threshold) bland = true;

      if (leave_pos == SIZE_MAX) {
        // bound flip of the entering variable
        double t = sigma * tmax;
        eng.x[q] += t;
        for (size_t p = 0; p < m; ++p)
          eng.x[eng.basis[p]] -= t * w[static_cast<Eigen::Index>(p)];
        eng.stat[q] = (eng.stat[q] == kAtLower) ? kAtUpper : kAtLower;
        continue;
      }

      double piv = w[static_cast<Eigen::Index>(leave_pos)];
      if (std::abs(piv) < Engine::kPivotTol) {
        if (!eng.etas.empty()) {
          if (!eng.factorize()) goto recover;
          eng.compute_basic_values();
          continue;  // retry with a fresh factorization
        }
        SolveResult r = finish(lp, eng, SolveStatus::NumericalFailure, nullptr, iters);
        return r;
      }

      double t = sigma * tmax;
      size_t jl = eng.basis[leave_pos];
      eng.x[q] += t;
      for (size_t p = 0; p < m; ++p)
        eng.x[eng.basis[p]] -= t * w[static_cast<Eigen::Index>(p)];
      eng.x[jl] = leave_to;
      eng.stat[jl] = (leave_to == eng.lo[jl]) ? kAtLower : kAtUpper;
      eng.stat[q] = kBasic;
      eng.basis[leave_pos] = q;
      eng.etas.push_back({leave_pos, w});

      if (eng.etas.size() >= Engine::kRefactorEvery) {
        if (!eng.factorize()) goto recover;
        eng.compute_basic_values();
      }
    }
  }

  // phases exhausted without reaching the optimality return (unreachable)
  return finish(lp, eng, SolveStatus::NumericalFailure, nullptr, iters);

recover:
  // the drifted basis stopped factorizing; fall back to the slack basis once
  if (!recovered) {
    recovered = true;
    eng.reset_basis();
    if (eng.factorize()) {
      eng.compute_basic_values();
      bland = true;
      goto restart;
    }
  }
  return finish(lp, eng, SolveStatus::NumericalFailure, nullptr, iters);
}

}  // namespace cmeb
