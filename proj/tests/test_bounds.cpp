#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "cmeb/moments.hpp"
#include "doctest.h"
#include "test_models.hpp"

using namespace cmeb;
using cmeb_tests::mm_infinity;
using cmeb_tests::schlogl_e3;
using cmeb_tests::schlogl_uni;
using cmeb_tests::toggle;

namespace {

// stationary law of a one-species birth-death chain, gamma-product form
struct BdOracle {
  std::vector<long double> pi;

  long double moment(int p) const {
    long double s = 0;
    for (size_t x = 0; x < pi.size(); ++x) s += pi[x] * std::pow((long double)x, p);
    return s;
  }
};

BdOracle bd_oracle(const std::function<long double(long long)>& lam,
                   const std::function<long double(long long)>& mu, long long cut) {
  BdOracle out;
  out.pi.assign(cut + 1, 0.0L);
  out.pi[0] = 1.0L;
  long double g = 1.0L, z = 1.0L;
  for (long long x = 1; x <= cut; ++x) {
    g *= lam(x - 1) / mu(x);
    out.pi[x] = g;
    z += g;
  }
  for (auto& v : out.pi) v /= z;
  return out;
}

BdOracle uni_oracle() {
  return bd_oracle([](long long x) { return 6.0L * x * (x - 1) + 50.0L; },
                   [](long long x) { return x * (x - 1) * (x - 2) / 3.0L + 3.0L * x; }, 400);
}

// rightmost real root via the companion matrix of a monic cubic
double companion_rightmost_root(double a2, double a1, double a0) {
  Eigen::Matrix3d cmp = Eigen::Matrix3d::Zero();
  cmp(1, 0) = 1;
  cmp(2, 1) = 1;
  cmp(0, 2) = -a0;
  cmp(1, 2) = -a1;
  cmp(2, 2) = -a2;
  Eigen::EigenSolver<Eigen::Matrix3d> es(cmp);
  double best = -kInf;
  for (int i = 0; i < 3; ++i)
    if (std::abs(es.eigenvalues()[i].imag()) < 1e-9)
      best = std::max(best, es.eigenvalues()[i].real());
  return best;
}

Eigen::MatrixXd block_at(const ConicProgram::Block& blk, const std::vector<double>& y) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(blk.dim, blk.dim);
  for (const auto& e : blk.constant) {
    s(e.r, e.c) += e.v;
    if (e.r != e.c) s(e.c, e.r) += e.v;
  }
  for (const auto& [var, entries] : blk.terms)
    for (const auto& e : entries) {
      s(e.r, e.c) += e.v * y[var];
      if (e.r != e.c) s(e.c, e.r) += e.v * y[var];
    }
  return s;
}

MomentBound point_bound(size_t axis, uint32_t p, double lo, double hi) {
  MomentBound mb;
  MultiIndex a(1);
  a.e[axis] = p;
  mb.alpha = a;
  mb.f = Polynomial::monomial(a, 1);
  mb.d = 3;
  mb.lower = lo;
  mb.upper = hi;
  mb.lower_status = SolveStatus::Optimal;
  mb.upper_status = SolveStatus::Optimal;
  return mb;
}

}  // namespace

TEST_CASE("spectrahedron structure at low orders") {
  auto net = schlogl_e3();
  auto sp = build_spectrahedron(net, 3);
  CHECK(sp.basis.size() == 4);
  CHECK(sp.equations.size() == 1);
  CHECK(sp.equations[0].degree() == 1);
  REQUIRE(sp.program.blocks().size() == 2);
  CHECK(sp.program.blocks()[0].dim == 2);
  CHECK(sp.program.blocks()[1].dim == 2);
  // normalization pins z_0 when o = 1
  const auto& norm = sp.program.equalities()[sp.normalization_row];
  REQUIRE(norm.coeffs.size() == 1);
  CHECK(norm.coeffs[0].first == sp.basis.index_of(MultiIndex(1)));
  CHECK(norm.rhs == doctest::Approx(1.0));

  auto tg = toggle();
  auto tsp = build_spectrahedron(tg, 5);
  CHECK(tsp.basis.size() == 21);
  REQUIRE(tsp.equations.size() == 2);  // d_a = 5, so |alpha| <= 1
  CHECK(tsp.equations[0].degree() == 1);
  CHECK(tsp.equations[1].degree() == 1);
  CHECK(tsp.program.blocks().size() == 3);

  // d = d_a - 1 = 4: admissible set empty, normalization + cones only
  auto tmin = build_spectrahedron(tg, 4);
  CHECK(tmin.equations.empty());
  CHECK(tmin.program.equalities().size() == 1);

  CHECK_THROWS_AS(build_spectrahedron(tg, 3), std::invalid_argument);
  CHECK_THROWS_AS(build_spectrahedron(net, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_spectrahedron(net, 3, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(build_spectrahedron(net, 3, {-2.0}), std::invalid_argument);
}

TEST_CASE("closed-form order-3 bounds and the root oracle") {
  auto an = analytic_schlogl_e3({Rational(1), Rational(1), Rational("4/5"), Rational(1)});
  CHECK(an.b[0] == doctest::Approx(0.8));
  CHECK(an.b[1] == doctest::Approx(4.0));
  CHECK(an.b[2] == doctest::Approx(4.0));
  CHECK(an.b[3] == doctest::Approx(1.0));

  // r4 solves x^3 - 4x^2 + 4x - 0.8 = 0, bracketed by (2, 3)
  double oracle = companion_rightmost_root(-4.0, 4.0, -0.8);
  CHECK(an.r4 > 2.0);
  CHECK(an.r4 < 3.0);
  CHECK(an.r4 == doctest::Approx(oracle).epsilon(1e-10));
  double resid = an.b[0] - an.b[1] * an.r4 + an.b[2] * an.r4 * an.r4 -
                 an.b[3] * an.r4 * an.r4 * an.r4;
  CHECK(std::abs(resid) < 1e-10);
  CHECK(an.u1 == doctest::Approx(an.r4));
  CHECK(an.u2 == doctest::Approx(an.r2_plus(an.r4)));
  CHECK(an.r2_minus(an.r4) < an.u2);

  // untreated branch: b3 < 2 sqrt(b2 b4)
  CHECK_THROWS_AS(
      analytic_schlogl_e3({Rational(1), Rational(1), Rational("4/5"), Rational(10)}),
      std::domain_error);

  // b1 -> 0 degenerates to the rightmost root of the quadratic factor
  auto tiny = analytic_schlogl_e3(
      {Rational(1), Rational(1), Rational("1/1000000000000"), Rational(1)});
  double b2 = 4, b3 = 4, b4 = 1;
  double limit = (b3 + std::sqrt(b3 * b3 - 4 * b2 * b4)) / (2 * b4);
  CHECK(tiny.r4 == doctest::Approx(limit).epsilon(1e-4));
}

TEST_CASE("order-3 bounds match the closed form") {
  auto net = schlogl_e3();
  auto an = analytic_schlogl_e3({Rational(1), Rational(1), Rational("4/5"), Rational(1)});

  MultiIndex a1(1), a2(1);
  a1.e[0] = 1;
  a2.e[0] = 2;

  auto m1 = bound_power_moment(net, 3, a1);
  REQUIRE(m1.valid());
  CHECK(m1.lower <= m1.upper);
  CHECK(m1.upper == doctest::Approx(an.u1).epsilon(1e-6));
  CHECK(std::abs(m1.lower) < 1e-6);

  auto m2 = bound_power_moment(net, 3, a2);
  REQUIRE(m2.valid());
  CHECK(m2.upper == doctest::Approx(an.u2).epsilon(1e-6));
  CHECK(std::abs(m2.lower) < 1e-6);

  // scaling choices must not move the optimum
  MomentOptions raw;
  raw.scale = false;
  auto m1_raw = bound_power_moment(net, 3, a1, raw);
  REQUIRE(m1_raw.valid());
  CHECK(m1_raw.upper == doctest::Approx(m1.upper).epsilon(1e-6));
  MomentOptions fixed;
  fixed.sigma = {2.5};
  auto m1_fix = bound_power_moment(net, 3, a1, fixed);
  REQUIRE(m1_fix.valid());
  CHECK(m1_fix.upper == doctest::Approx(m1.upper).epsilon(1e-6));

  // <o/o> = <1> is pinned by normalization
  auto one = bound_moment(net, 3, net.o());
  REQUIRE(one.valid());
  CHECK(one.lower == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(one.upper == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("linear-propensity network is pinned to the exact law") {
  // M/M/inf with lambda = 4, mu = 1: Poisson(4), moments 4, 20, 116; the
  // moment equations determine every y up to the order, so l = u = truth.
  auto net = mm_infinity("4", "1");
  const double truth[3] = {4.0, 20.0, 116.0};
  for (uint32_t p = 1; p <= 3; ++p) {
    MultiIndex a(1);
    a.e[0] = p;
    auto mb = bound_power_moment(net, 3, a);
    REQUIRE(mb.valid());
    CHECK(mb.lower == doctest::Approx(truth[p - 1]).epsilon(1e-6));
    CHECK(mb.upper == doctest::Approx(truth[p - 1]).epsilon(1e-6));
  }
}

TEST_CASE("hierarchy encloses the series oracle and tightens") {
  auto net = schlogl_uni();
  auto oracle = uni_oracle();
  const double m[3] = {(double)oracle.moment(1), (double)oracle.moment(2),
                       (double)oracle.moment(3)};
  CHECK(m[0] == doctest::Approx(17.953740526476).epsilon(1e-9));
  CHECK(m[1] == doctest::Approx(340.39259090714).epsilon(1e-9));
  CHECK(m[2] == doctest::Approx(6777.5859337821).epsilon(1e-9));

  std::vector<MultiIndex> targets;
  for (uint32_t p = 1; p <= 3; ++p) {
    MultiIndex a(1);
    a.e[0] = p;
    targets.push_back(a);
  }
  auto rows = moment_hierarchy(net, targets, {4, 6, 8});
  REQUIRE(rows.size() == 9);

  for (size_t t = 0; t < 3; ++t) {
    double prev_lo = -kInf, prev_hi = kInf;
    for (size_t k = 0; k < 3; ++k) {
      const auto& row = rows[3 * t + k];
      CHECK(row.alpha == targets[t]);
      REQUIRE(row.bound.valid());
      // enclosure of the truth
      CHECK(row.bound.lower <= m[t] + 1e-6);
      CHECK(row.bound.upper >= m[t] - 1e-6);
      // monotone in d
      CHECK(row.bound.lower >= prev_lo - 1e-6);
      CHECK(row.bound.upper <= prev_hi + 1e-6);
      prev_lo = row.bound.lower;
      prev_hi = row.bound.upper;
    }
    // the top order localizes the moment reasonably tightly
    CHECK(prev_hi - prev_lo < 0.5 * m[t]);
  }
}

TEST_CASE("exact moment vector satisfies every constraint") {
  auto net = schlogl_uni();
  auto oracle = uni_oracle();
  const uint32_t d = 8;
  const double sig = 20.0;
  auto sp = build_spectrahedron(net, d, {sig});

  std::vector<double> zhat(sp.basis.size());
  for (size_t j = 0; j < sp.basis.size(); ++j)
    zhat[j] = (double)oracle.moment((int)sp.basis[j].degree()) / sp.z_mult[j];

  for (const auto& row : sp.program.equalities()) {
    double r = -row.rhs;
    for (const auto& [j, a] : row.coeffs) r += a * zhat[j];
    CHECK(std::abs(r) < 1e-8);
  }
  for (const auto& blk : sp.program.blocks()) {
    Eigen::MatrixXd s = block_at(blk, zhat);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
  }
}

TEST_CASE("summary statistic intervals") {
  // exact Poisson(4) moments as point intervals
  auto s = stats_intervals(point_bound(0, 1, 4, 4), point_bound(0, 2, 20, 20),
                           point_bound(0, 3, 116, 116));
  CHECK(s.variance.lo == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(s.variance.hi == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(s.cv.lo == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.cv.hi == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.skewness.lo == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(s.skewness.hi == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(s.variance.bounded());

  // deterministic law: variance collapses to zero, skewness has no defined scale
  auto det = stats_intervals(point_bound(0, 1, 3, 3), point_bound(0, 2, 9, 9),
                             point_bound(0, 3, 27, 27));
  CHECK(det.variance.lo == 0.0);
  CHECK(det.variance.hi < 1e-12);
  CHECK(!det.skewness.bounded());

  // mean interval touching zero leaves cv unbounded above
  auto wide = stats_intervals(point_bound(0, 1, -1, 2), point_bound(0, 2, 1, 9),
                              point_bound(0, 3, 1, 27));
  CHECK(wide.cv.hi == kInf);

  // wrong moment shapes are rejected
  CHECK_THROWS_AS(stats_intervals(point_bound(0, 2, 4, 4), point_bound(0, 2, 20, 20),
                                  point_bound(0, 3, 116, 116)),
                  std::invalid_argument);
  auto invalid = point_bound(0, 1, 4, 4);
  invalid.upper_status = SolveStatus::IterationLimit;
  CHECK_THROWS_AS(stats_intervals(invalid, point_bound(0, 2, 20, 20),
                                  point_bound(0, 3, 116, 116)),
                  std::invalid_argument);
}

TEST_CASE("interval statistics wrap the solved hierarchy") {
  auto net = schlogl_uni();
  auto oracle = uni_oracle();
  MultiIndex a1(1), a2(1), a3(1);
  a1.e[0] = 1;
  a2.e[0] = 2;
  a3.e[0] = 3;
  auto m1 = bound_power_moment(net, 8, a1);
  auto m2 = bound_power_moment(net, 8, a2);
  auto m3 = bound_power_moment(net, 8, a3);
  REQUIRE((m1.valid() && m2.valid() && m3.valid()));
  auto s = stats_intervals(m1, m2, m3);

  long double mu = oracle.moment(1);
  long double var = oracle.moment(2) - mu * mu;
  long double mu3 = oracle.moment(3) - 3 * mu * oracle.moment(2) + 2 * mu * mu * mu;
  CHECK(s.variance.lo <= (double)var + 1e-9);
  CHECK(s.variance.hi >= (double)var - 1e-9);
  CHECK(s.cv.lo <= (double)(std::sqrt(var) / mu) + 1e-9);
  CHECK(s.cv.hi >= (double)(std::sqrt(var) / mu) - 1e-9);
  CHECK(s.skewness.lo <= (double)(mu3 / (var * std::sqrt(var))) + 1e-9);
  CHECK(s.skewness.hi >= (double)(mu3 / (var * std::sqrt(var))) - 1e-9);
}

TEST_CASE("bound preconditions") {
  auto net = schlogl_e3();
  MultiIndex a4(1);
  a4.e[0] = 4;
  CHECK_THROWS_AS(bound_power_moment(net, 3, a4), std::invalid_argument);
  CHECK_THROWS_AS(bound_moment(net, 3, Polynomial::monomial(a4, 1)), std::invalid_argument);
  MultiIndex wrong(2);
  wrong.e[0] = 1;
  CHECK_THROWS_AS(bound_power_moment(net, 3, wrong), std::invalid_argument);

  auto tg = toggle();
  MultiIndex t1(2);
  t1.e[0] = 1;
  CHECK_THROWS_AS(bound_power_moment(tg, 4, t1), std::invalid_argument);  // d - d_o = 0
}
