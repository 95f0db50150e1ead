#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numeric>
#include <vector>

#include "cmeb/birthdeath.hpp"
#include "cmeb/statebounds.hpp"
#include "doctest.h"
#include "test_models.hpp"

using namespace cmeb;
using cmeb_tests::mm_infinity;
using cmeb_tests::schlogl_bi;
using cmeb_tests::schlogl_uni;
using cmeb_tests::two_class;

namespace {

WeightSpec axis_weight(double c) { return WeightSpec::power_form({1}, 1, c); }

double poisson_pmf(double lambda, int64_t k) {
  return std::exp(-lambda + k * std::log(lambda) - std::lgamma((double)k + 1));
}

// independent pair of M/M/infinity species, product-Poisson stationary law
ReactionNetwork double_queue() {
  return parse_network(
      "species: A B\n"
      "0 -> A @ mass_action(3/2)\nA -> 0 @ mass_action(1)\n"
      "0 -> B @ mass_action(1)\nB -> 0 @ mass_action(1)\n");
}

}  // namespace

TEST_CASE("weight structure checks") {
  auto ws = WeightSpec::power_form({1, 2}, 6, 5.0901e8);
  auto axis = weight_axis_powers(ws.w);
  REQUIRE(axis.size() == 2);
  CHECK(axis[0].first == 6);
  CHECK(axis[0].second == doctest::Approx(1.0));
  CHECK(axis[1].first == 6);
  CHECK(axis[1].second == doctest::Approx(64.0));
  CHECK(to_double(ws.w.eval({1, 1})) == doctest::Approx(729.0));

  CHECK_THROWS_AS(WeightSpec::power_form({1, 0}, 6, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(WeightSpec::power_form({1}, 0, 1.0), std::invalid_argument);

  // x1 + x1*x2 leaves the x2 axis unbounded
  auto x1 = Polynomial::variable(2, 0);
  auto x2 = Polynomial::variable(2, 1);
  CHECK_THROWS_AS(weight_axis_powers(x1 + x1 * x2), std::invalid_argument);
  CHECK_THROWS_AS(weight_axis_powers(-x1), std::invalid_argument);
  CHECK_THROWS_AS(weight_axis_powers(Polynomial::constant(2, 0)), std::invalid_argument);
}

TEST_CASE("truncation enumeration") {
  auto net = schlogl_uni();
  auto trunc = build_truncation(net, axis_weight(18.0), 40.0);
  REQUIRE(trunc.states.size() == 40);
  for (int64_t x = 0; x < 40; ++x) {
    CHECK(trunc.states[(size_t)x] == State{x});
    CHECK(trunc.contains({x}));
  }
  CHECK(!trunc.contains({40}));
  // every state except the boundary one has its incoming neighbours inside
  REQUIRE(trunc.interior.size() == 39);
  CHECK(trunc.interior.back() == 38);

  CHECK_THROWS_AS(build_truncation(net, axis_weight(1.0), 40.0, 10), std::runtime_error);

  // w(0) = 1 > r leaves the sublevel set empty
  WeightSpec shifted{Polynomial::variable(1, 0) + Polynomial::constant(1, 1), 1.0};
  CHECK_THROWS_AS(build_truncation(net, shifted, 0.5), std::invalid_argument);

  auto trunc2 = build_truncation(double_queue(), WeightSpec::power_form({1, 1}, 1, 2.6), 4.0);
  // graded order: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
  REQUIRE(trunc2.states.size() == 10);
  CHECK(trunc2.states[1] == State{1, 0});
  CHECK(trunc2.states[2] == State{0, 1});
  CHECK(trunc2.states[4] == State{1, 1});
}

TEST_CASE("true distribution restricted to the truncation is feasible") {
  auto net = schlogl_uni();
  auto pi = analytic_pi(BirthDeathModel::from_network(net), 1e-13);
  const double c = 18.0, r = 60.0;

  auto ws = axis_weight(c);
  auto trunc = build_truncation(net, ws, r);
  auto tp = build_polytope(net, trunc, ws);
  CHECK(tp.eps == doctest::Approx(c / r));
  CHECK(tp.informative);

  std::vector<double> point(trunc.states.size());
  for (size_t j = 0; j < point.size(); ++j) point[j] = pi(trunc.states[j][0]);

  for (const auto& row : tp.lp.rows()) {
    double v = 0;
    for (auto [col, a] : row.coeffs) v += a * point[col];
    CHECK(v >= row.lo - 1e-9);
    CHECK(v <= row.hi + 1e-9);
  }
  // Markov: the mass outside S_r is at most eps
  double inside = std::accumulate(point.begin(), point.end(), 0.0);
  CHECK(1.0 - inside <= tp.eps);
}

TEST_CASE("indicator envelope matches the closed birth-death form") {
  struct Case {
    ReactionNetwork net;
    double c, r;
  };
  for (const auto& [net, c, r] : {Case{schlogl_uni(), 18.0, 25.0},
                                  Case{schlogl_uni(), 18.0, 60.0},
                                  Case{schlogl_bi(), 98.0, 115.0},
                                  Case{mm_infinity("3", "1"), 3.3, 25.0}}) {
    auto db = bound_distribution(net, axis_weight(c), r);
    auto bd = bd_bounds(BirthDeathModel::from_network(net), 1, c, r);
    REQUIRE(db.lower.size() == bd.upper.size());
    for (size_t x = 0; x < db.lower.size(); ++x) {
      CHECK(db.upper[x] == doctest::Approx(bd.upper[x]).scale(1).epsilon(1e-8));
      CHECK(db.lower[x] == doctest::Approx(bd.lower[x]).scale(1).epsilon(1e-8));
    }
    CHECK(db.eps == doctest::Approx(bd.eps));
  }
}

TEST_CASE("sandwich tightens with r and the reported errors are exact") {
  auto net = schlogl_uni();
  auto pi = analytic_pi(BirthDeathModel::from_network(net), 1e-13);
  const double c = 18.0;

  double prev_eps_lower = 1.0;
  for (double r : {30.0, 60.0, 100.0}) {
    auto db = bound_distribution(net, axis_weight(c), r);
    REQUIRE(db.informative);

    double lower_mass = 0;
    for (size_t x = 0; x < db.lower.size(); ++x) {
      CHECK(db.lower[x] <= pi((int64_t)x) + 1e-9);
      CHECK(db.upper[x] >= pi((int64_t)x) - 1e-9);
      lower_mass += db.lower[x];
    }
    // l vanishes off S_r, so the L1 error is exactly the missing lower mass
    double l1 = 1.0 - lower_mass;
    CHECK(db.eps_lower == doctest::Approx(l1).epsilon(1e-12));
    CHECK(db.eps_lower <= prev_eps_lower + 1e-14);
    CHECK(db.eps_upper >= db.eps);
    prev_eps_lower = db.eps_lower;
  }
  CHECK(prev_eps_lower < 0.25);
}

TEST_CASE("uniqueness certificate on a one-class chain") {
  auto db = bound_distribution(schlogl_uni(), axis_weight(18.0), 60.0);
  auto v = uniqueness_test(db);
  REQUIRE(v.unique_certified);
  REQUIRE(v.witness.has_value());
  CHECK((*v.witness)[0] >= 14);
  CHECK((*v.witness)[0] <= 21);
  CHECK(v.mass > 1e-3);
}

TEST_CASE("two ergodic classes: vacuous lower bounds, parity-confined candidates") {
  auto net = two_class();
  auto ws = WeightSpec::power_form({1, 1}, 1, 3.0);
  const double r = 20.0;

  auto db = bound_distribution(net, ws, r);
  for (double l : db.lower) CHECK(l <= 1e-9);
  CHECK(!uniqueness_test(db).unique_certified);
  double upper_mass = std::accumulate(db.upper.begin(), db.upper.end(), 0.0);
  CHECK(upper_mass >= 1.5);

  for (int64_t parity : {0, 1}) {
    auto ec = ergodic_candidate(net, ws, r, {parity, 1});
    REQUIRE(ec.status == SolveStatus::Optimal);
    CHECK(ec.mass >= 1.0 - ws.c / r - 1e-6);
    CHECK(!ec.support.empty());
    for (size_t j : ec.support) CHECK(ec.states[j][0] % 2 == parity);
  }
  CHECK_THROWS_AS(ergodic_candidate(net, ws, r, {25, 0}), std::invalid_argument);
}

TEST_CASE("marginal bounds bracket the product-law marginal") {
  auto net = double_queue();
  auto ws = WeightSpec::power_form({1, 1}, 1, 2.6);
  const double r = 26.0;

  auto mb = bound_marginal(net, ws, r, size_t{0});
  REQUIRE(!mb.cells.empty());
  CHECK(std::is_sorted(mb.cells.begin(), mb.cells.end()));
  CHECK(mb.eps == doctest::Approx(ws.c / r));
  for (size_t i = 0; i < mb.cells.size() && mb.cells[i] <= 6; ++i) {
    double truth = poisson_pmf(1.5, mb.cells[i]);
    CHECK(mb.lower[i] <= truth + 1e-9);
    CHECK(mb.upper[i] + mb.eps >= truth - 1e-9);
  }
  CHECK(mb.eps_lower >= 0.0);
  CHECK(mb.eps_lower <= 1.0);
  CHECK(mb.eps_upper >= mb.eps);

  // coarser partition: total molecule count, labels drawn from the weight
  auto total = bound_marginal(
      net, ws, r, [](const State& x) { return x[0] + x[1]; });
  for (size_t i = 0; i < total.cells.size() && total.cells[i] <= 4; ++i) {
    double truth = 0;
    for (int64_t a = 0; a <= total.cells[i]; ++a)
      truth += poisson_pmf(1.5, a) * poisson_pmf(1.0, total.cells[i] - a);
    CHECK(total.lower[i] <= truth + 1e-9);
    CHECK(total.upper[i] + total.eps >= truth - 1e-9);
  }

  CHECK_THROWS_AS(bound_marginal(net, ws, r, size_t{2}), std::invalid_argument);
}

TEST_CASE("averages: restriction, extension, and the tail supremum") {
  auto net = schlogl_uni();
  auto pi = analytic_pi(BirthDeathModel::from_network(net), 1e-13);
  double mean = 0;
  for (int64_t x = 0; x <= pi.radius; ++x) mean += (double)x * pi(x);

  auto ws = WeightSpec::power_form({1}, 2, 341.0);  // w = x^2, c >= second moment
  const double r = 3600.0;
  auto f = Polynomial::variable(1, 0);

  auto ab = bound_average(net, ws, r, f);
  REQUIRE(ab.lower_status == SolveStatus::Optimal);
  REQUIRE(ab.upper_status == SolveStatus::Optimal);
  // sup x / x^2 over x^2 >= r is r^{-1/2}
  CHECK(ab.sup_ratio == doctest::Approx(1.0 / 60.0).epsilon(1e-12));
  CHECK(ab.lower_one_sided);
  CHECK(!ab.upper_one_sided);
  CHECK(ab.lower_ext == ab.lower);
  CHECK(ab.upper_ext == doctest::Approx(ab.upper + 341.0 / 60.0));
  CHECK(ab.lower_ext <= mean + 1e-9);
  CHECK(ab.upper_ext >= mean - 1e-9);

  // unit average pins the mass window
  auto one = bound_average(net, ws, r, Polynomial::constant(1, 1));
  CHECK(one.lower == doctest::Approx(1.0 - ws.c / r).epsilon(1e-9));
  CHECK(one.upper == doctest::Approx(1.0).epsilon(1e-9));

  // x^3 grows faster than w, so the automatic supremum is unavailable
  auto cube = bound_average(net, ws, r, f * f * f);
  CHECK(cube.sup_ratio == kInf);
  CHECK(cube.upper_ext == kInf);
  CHECK(cube.lower_ext == cube.lower);
  auto fed = bound_average(net, ws, r, f * f * f, {}, 7.0);
  CHECK(fed.sup_ratio == doctest::Approx(7.0));
  CHECK(fed.upper_ext == doctest::Approx(fed.upper + 341.0 * 7.0));

  // c below the true mean makes the polytope empty at tight eps
  CHECK_THROWS_AS(bound_average(net, axis_weight(10.0), 200.0, f), std::runtime_error);
}

TEST_CASE("decision scaling leaves the bounds unchanged") {
  auto net = schlogl_uni();
  auto ws = axis_weight(18.0);
  StateBoundOptions opts;

  opts.scaling = DecisionScaling::None;
  auto base = bound_distribution(net, ws, 40.0, opts);
  for (auto mode : {DecisionScaling::ByExitRate, DecisionScaling::ByWeight}) {
    opts.scaling = mode;
    auto db = bound_distribution(net, ws, 40.0, opts);
    for (size_t x = 0; x < base.lower.size(); ++x) {
      CHECK(db.lower[x] == doctest::Approx(base.lower[x]).scale(1).epsilon(1e-8));
      CHECK(db.upper[x] == doctest::Approx(base.upper[x]).scale(1).epsilon(1e-8));
    }
  }

  auto trunc = build_truncation(net, ws, 40.0);
  auto tp = build_polytope(net, trunc, ws);
  auto sp = scale_decision_variables(tp, DecisionScaling::ByExitRate);
  std::vector<double> scaled(sp.scale.size(), 1.0);
  auto back = sp.unscale(scaled);
  for (size_t j = 0; j < back.size(); ++j)
    CHECK(back[j] == doctest::Approx(1.0 / sp.scale[j]));
}

TEST_CASE("worker threads do not change the answer") {
  auto net = schlogl_uni();
  auto ws = axis_weight(18.0);
  auto seq = bound_distribution(net, ws, 30.0);
  StateBoundOptions opts;
  opts.threads = 3;
  auto par = bound_distribution(net, ws, 30.0, opts);
  for (size_t x = 0; x < seq.lower.size(); ++x) {
    CHECK(par.lower[x] == doctest::Approx(seq.lower[x]).scale(1).epsilon(1e-9));
    CHECK(par.upper[x] == doctest::Approx(seq.upper[x]).scale(1).epsilon(1e-9));
  }
}

TEST_CASE("uninformative mass window still yields valid bounds") {
  auto net = schlogl_uni();
  // eps = c/r >= 1: the mass floor clamps to zero and lower bounds vanish
  auto db = bound_distribution(net, axis_weight(18.0), 15.0);
  CHECK(!db.informative);
  CHECK(db.eps_lower == doctest::Approx(1.0));
  auto pi = analytic_pi(BirthDeathModel::from_network(net), 1e-13);
  for (size_t x = 0; x < db.upper.size(); ++x) {
    CHECK(db.lower[x] <= 1e-12);
    CHECK(db.upper[x] >= pi((int64_t)x) - 1e-9);
  }
}
