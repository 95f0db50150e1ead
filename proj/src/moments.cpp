#include "cmeb/moments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmeb {

namespace {

std::vector<double> basis_multipliers(const MonomialBasis& basis,
                                      const std::vector<double>& sigma) {
  std::vector<double> mult(basis.size(), 1.0);
  for (size_t i = 0; i < basis.size(); ++i) {
    double m = 1.0;
    for (size_t ax = 0; ax < sigma.size(); ++ax)
      for (uint32_t e = 0; e < basis[i].e[ax]; ++e) m *= sigma[ax];
    mult[i] = m;
  }
  return mult;
}

size_t add_normalized_row(ConicProgram& cp, std::vector<std::pair<size_t, double>> coeffs,
                          double rhs) {
  double mx = 0;
  for (const auto& [j, a] : coeffs) mx = std::max(mx, std::abs(a));
  if (mx > 0) {
    for (auto& [j, a] : coeffs) a /= mx;
    rhs /= mx;
  }
  return cp.add_equality(std::move(coeffs), rhs);
}

}  // namespace

Spectrahedron build_spectrahedron(const ReactionNetwork& net, uint32_t d,
                                  const std::vector<double>& sigma) {
  const size_t n = net.n();
  if (d < 1 || d < net.d_o() || d + 1 < net.d_a())
    throw std::invalid_argument("order d = " + std::to_string(d) +
                                " too small: need d >= max(1, d_o, d_a - 1) with d_o = " +
                                std::to_string(net.d_o()) + ", d_a = " +
                                std::to_string(net.d_a()));
  std::vector<double> sig = sigma;
  if (sig.empty()) sig.assign(n, 1.0);
  if (sig.size() != n) throw std::invalid_argument("one sigma per species");
  for (double s : sig)
    if (!(s > 0) || !std::isfinite(s)) throw std::invalid_argument("sigma must be positive");

  Spectrahedron sp{d, MonomialBasis(n, d), ConicProgram(0), 0, {}, sig, {}};
  sp.z_mult = basis_multipliers(sp.basis, sig);
  sp.program = ConicProgram(sp.basis.size());

  // normalization <o/o> = 1
  {
    std::vector<std::pair<size_t, double>> row;
    for (const auto& [beta, c] : net.o().terms()) {
      size_t j = sp.basis.index_of(beta);
      row.push_back({j, to_double(c) * sp.z_mult[j]});
    }
    sp.normalization_row = add_normalized_row(sp.program, std::move(row), 1.0);
  }

  // moment equations, graded-lex over admissible alpha
  if (d >= net.d_a()) {
    uint32_t amax = d + 1 - net.d_a();
    MonomialBasis alphas(n, amax);
    for (size_t ai = 0; ai < alphas.size(); ++ai) {
      const MultiIndex& alpha = alphas[ai];
      if (alpha.degree() == 0) continue;
      auto coeffs = moment_equation_coeffs(net, alpha, d);
      std::vector<std::pair<size_t, double>> row;
      for (size_t j = 0; j < coeffs.size(); ++j)
        if (coeffs[j] != 0) row.push_back({j, to_double(coeffs[j]) * sp.z_mult[j]});
      add_normalized_row(sp.program, std::move(row), 0.0);
      sp.equations.push_back(alpha);
    }
  }

  // PSD blocks; scaled variables keep unit coefficients by congruence
  for (const auto& loc : localizing_structure(n, d)) {
    size_t b = sp.program.add_block(loc.dim());
    for (size_t r = 0; r < loc.dim(); ++r)
      for (size_t c = 0; c <= r; ++c)
        sp.program.block_add_term(b, sp.basis.index_of(loc.entries[r][c]), r, c, 1.0);
  }
  return sp;
}

void set_moment_objective(ConicProgram& cp, const Spectrahedron& sp, const Polynomial& f) {
  for (size_t j = 0; j < cp.num_vars(); ++j) cp.set_objective(j, 0.0);
  for (const auto& [beta, c] : f.terms()) {
    size_t j = sp.basis.index_of(beta);
    cp.set_objective(j, to_double(c) * sp.z_mult[j]);
  }
}

namespace {

// Mean-scale estimate from the cheapest usable order. Badly scaled data can
// stall the solver, so walk a geometric ladder of uniform trial scales until
// the probe converges for every species, then read off per-species means.
std::vector<double> probe_sigma(const ReactionNetwork& net, uint32_t d,
                                const MomentOptions& opts) {
  const size_t n = net.n();
  std::vector<double> sig(n, 1.0);
  uint32_t d_probe = std::max({net.d_o() + 1, net.d_a(), 2u});
  if (d_probe > d) return sig;

  for (double trial = 1.0; trial <= 1e8; trial *= 10.0) {
    Spectrahedron sp = build_spectrahedron(net, d_probe, std::vector<double>(n, trial));
    std::vector<double> means(n);
    bool ok = true;
    for (size_t i = 0; i < n && ok; ++i) {
      MultiIndex alpha(n);
      alpha.e[i] = 1;
      ConicProgram cp = sp.program;
      set_moment_objective(cp, sp, net.o() * Polynomial::monomial(alpha, 1));
      cp.set_sense(ConicProgram::Sense::Max);
      SolveResult res = solve_sdp(cp, opts.tol, opts.sdp);
      if (res.status == SolveStatus::Optimal && std::isfinite(res.value))
        means[i] = res.value;
      else
        ok = false;
    }
    if (ok) {
      for (size_t i = 0; i < n; ++i) sig[i] = std::clamp(means[i], 1.0, 1e9);
      return sig;
    }
  }
  return sig;
}

}  // namespace

MomentBound bound_moment(const ReactionNetwork& net, uint32_t d, const Polynomial& f,
                         const MomentOptions& opts) {
  if (f.vars() != net.n()) throw std::invalid_argument("target arity mismatch");
  if (f.degree() > d)
    throw std::invalid_argument("target degree " + std::to_string(f.degree()) +
                                " exceeds the order " + std::to_string(d));
  std::vector<double> sigma = opts.sigma;
  if (sigma.empty() && opts.scale) sigma = probe_sigma(net, d, opts);

  Spectrahedron sp = build_spectrahedron(net, d, sigma);
  MomentBound mb;
  mb.f = f;
  mb.d = d;
  mb.sigma = sp.sigma;

  ConicProgram cp = sp.program;
  set_moment_objective(cp, sp, f);

  cp.set_sense(ConicProgram::Sense::Min);
  mb.lower_cert = solve_sdp(cp, opts.tol, opts.sdp);
  mb.lower_status = mb.lower_cert.status;
  if (mb.lower_status == SolveStatus::Optimal) mb.lower = mb.lower_cert.value;

  cp.set_sense(ConicProgram::Sense::Max);
  mb.upper_cert = solve_sdp(cp, opts.tol, opts.sdp);
  mb.upper_status = mb.upper_cert.status;
  if (mb.upper_status == SolveStatus::Optimal) mb.upper = mb.upper_cert.value;
  return mb;
}

MomentBound bound_power_moment(const ReactionNetwork& net, uint32_t d,
                               const MultiIndex& alpha, const MomentOptions& opts) {
  if (alpha.vars() != net.n()) throw std::invalid_argument("multi-index arity mismatch");
  if (alpha.degree() + net.d_o() > d)
    throw std::invalid_argument("power moment needs |alpha| <= d - d_o; got |alpha| = " +
                                std::to_string(alpha.degree()) + ", d = " + std::to_string(d) +
                                ", d_o = " + std::to_string(net.d_o()));
  Polynomial f = net.o() * Polynomial::monomial(alpha, 1);
  MomentBound mb = bound_moment(net, d, f, opts);
  mb.alpha = alpha;
  return mb;
}

double SchloglE3::r2_plus(double x) const {
  double disc = 4 * b[0] * b[3] * x + (b[2] * b[2] - 4 * b[1] * b[3]) * x * x;
  return (b[2] * x + std::sqrt(std::max(disc, 0.0))) / (2 * b[3]);
}

double SchloglE3::r2_minus(double x) const {
  double disc = 4 * b[0] * b[3] * x + (b[2] * b[2] - 4 * b[1] * b[3]) * x * x;
  return (b[2] * x - std::sqrt(std::max(disc, 0.0))) / (2 * b[3]);
}

SchloglE3 analytic_schlogl_e3(const std::array<Rational, 4>& k) {
  for (const auto& ki : k)
    if (ki <= 0) throw std::invalid_argument("rate constants must be positive");
  SchloglE3 out;
  out.b[0] = to_double(k[2]);
  out.b[1] = to_double(k[0] + 2 * k[1] + k[3]);
  out.b[2] = to_double(k[0] + 3 * k[1]);
  out.b[3] = to_double(k[1]);
  if (out.b[2] < 2 * std::sqrt(out.b[1] * out.b[3]))
    throw std::domain_error("branch b3 < 2 sqrt(b2 b4) is not covered by the closed form");

  // rightmost positive root of c(x) = b1 - b2 x + b3 x^2 - b4 x^3
  const double b1 = out.b[0], b2 = out.b[1], b3 = out.b[2], b4 = out.b[3];
  auto c = [&](double x) { return b1 - b2 * x + b3 * x * x - b4 * x * x * x; };
  auto cd = [&](double x) { return -b2 + 2 * b3 * x - 3 * b4 * x * x; };

  double U = 1.0 + (std::abs(b1) + std::abs(b2) + std::abs(b3)) / b4;  // Cauchy bound
  // partition by the critical points of c
  std::vector<double> pts{0.0};
  double qa = -3 * b4, qb = 2 * b3, qc = -b2;
  double disc = qb * qb - 4 * qa * qc;
  if (disc >= 0) {
    double r1 = (-qb + std::sqrt(disc)) / (2 * qa);
    double r2 = (-qb - std::sqrt(disc)) / (2 * qa);
    for (double r : {std::min(r1, r2), std::max(r1, r2)})
      if (r > 0 && r < U) pts.push_back(r);
  }
  pts.push_back(U);
  std::sort(pts.begin(), pts.end());

  double lo = -1, hi = -1;
  for (size_t i = pts.size() - 1; i > 0; --i) {
    double a = pts[i - 1], bb = pts[i];
    if (c(a) == 0) {
      lo = hi = a;
      break;
    }
    if (c(bb) == 0) {
      lo = hi = bb;
      break;
    }
    if (c(a) > 0 && c(bb) < 0) {
      lo = a;
      hi = bb;
      break;
    }
    if (c(a) < 0 && c(bb) > 0) {
      lo = a;
      hi = bb;
      break;
    }
  }
  if (lo < 0) throw std::domain_error("no positive root found for the cubic");

  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200 && hi - lo > 1e-15 * (1 + hi); ++iter) {
    mid = 0.5 * (lo + hi);
    double cm = c(mid);
    if (cm == 0) break;
    if ((c(lo) > 0) == (cm > 0))
      lo = mid;
    else
      hi = mid;
  }
  double r = 0.5 * (lo + hi);
  for (int iter = 0; iter < 50; ++iter) {  // Newton polish
    double step = c(r) / cd(r);
    double next = r - step;
    if (!std::isfinite(next) || next < lo - 1e-9 || next > hi + 1e-9) break;
    r = next;
    if (std::abs(step) < 1e-12 * (1 + std::abs(r))) break;
  }
  out.r4 = r;
  out.u1 = r;
  out.u2 = out.r2_plus(r);
  return out;
}

namespace {

double down(double v) { return std::nextafter(v, -kInf); }
double up(double v) { return std::nextafter(v, kInf); }

Interval iv(double lo, double hi) { return {lo, hi}; }

Interval iv_add(Interval a, Interval b) { return {down(a.lo + b.lo), up(a.hi + b.hi)}; }
Interval iv_sub(Interval a, Interval b) { return {down(a.lo - b.hi), up(a.hi - b.lo)}; }

Interval iv_mul(Interval a, Interval b) {
  double c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  double lo = c[0], hi = c[0];
  for (double v : c) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {down(lo), up(hi)};
}

Interval iv_scale(Interval a, double s) {
  return s >= 0 ? Interval{down(a.lo * s), up(a.hi * s)}
                : Interval{down(a.hi * s), up(a.lo * s)};
}

Interval iv_square(Interval a) {
  double lo2 = a.lo * a.lo, hi2 = a.hi * a.hi;
  double lo = (a.lo <= 0 && a.hi >= 0) ? 0.0 : std::min(lo2, hi2);
  return {down(lo), up(std::max(lo2, hi2))};
}

// a / b with b.lo > 0 required by the caller
Interval iv_div_pos(Interval a, Interval b) {
  double c[4] = {a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi};
  double lo = c[0], hi = c[0];
  for (double v : c) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {down(lo), up(hi)};
}

Interval iv_sqrt_nonneg(Interval a) {
  double lo = std::max(a.lo, 0.0);
  return {down(std::sqrt(lo)), up(std::sqrt(std::max(a.hi, 0.0)))};
}

}  // namespace

StatsIntervals stats_intervals(const MomentBound& m1, const MomentBound& m2,
                               const MomentBound& m3) {
  std::optional<size_t> axis;
  auto check_axis = [&axis](const MomentBound& m, uint32_t want) -> void {
    if (!m.alpha) return;  // generic target, caller vouches
    for (size_t i = 0; i < m.alpha->vars(); ++i) {
      if (m.alpha->e[i] == 0) continue;
      if (m.alpha->e[i] != want || (axis && *axis != i))
        throw std::invalid_argument(
            "summary statistics need <x^1>, <x^2>, <x^3> of one species");
      axis = i;
    }
    if (m.alpha->degree() != want)
      throw std::invalid_argument(
          "summary statistics need <x^1>, <x^2>, <x^3> of one species");
  };
  check_axis(m1, 1);
  check_axis(m2, 2);
  check_axis(m3, 3);
  if (!(m1.valid() && m2.valid() && m3.valid()))
    throw std::invalid_argument("summary statistics need valid bounds on all three moments");

  Interval i1 = iv(m1.lower, m1.upper);
  Interval i2 = iv(m2.lower, m2.upper);
  Interval i3 = iv(m3.lower, m3.upper);

  StatsIntervals out;
  Interval var = iv_sub(i2, iv_square(i1));
  var.lo = std::max(var.lo, 0.0);
  out.variance = var;

  // cv = sqrt(var) / m1, defined only when the mean is certainly positive
  if (i1.lo > 0) {
    out.cv = iv_div_pos(iv_sqrt_nonneg(var), i1);
  } else {
    out.cv = {0.0, kInf};
  }

  // skew = (m3 - 3 m1 m2 + 2 m1^3) / var^{3/2}
  Interval mu3 = iv_add(iv_sub(i3, iv_scale(iv_mul(i1, i2), 3.0)),
                        iv_scale(iv_mul(i1, iv_square(i1)), 2.0));
  if (var.lo > 0) {
    Interval denom = iv_mul(iv_sqrt_nonneg(var), var);  // var^{3/2}
    out.skewness = iv_div_pos(mu3, denom);
  } else {
    out.skewness = {-kInf, kInf};
  }
  return out;
}

std::vector<HierarchyRow> moment_hierarchy(const ReactionNetwork& net,
                                           const std::vector<MultiIndex>& targets,
                                           const std::vector<uint32_t>& ds,
                                           const MomentOptions& opts) {
  std::vector<HierarchyRow> rows;
  for (const auto& alpha : targets)
    for (uint32_t d : ds) rows.push_back({alpha, d, bound_power_moment(net, d, alpha, opts)});
  return rows;
}

}  // namespace cmeb
