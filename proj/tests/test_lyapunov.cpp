#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "cmeb/lyapunov.hpp"

#include "doctest.h"
#include "json.hpp"
#include "test_models.hpp"

using namespace cmeb;
using cmeb_tests::schlogl_e3;
using cmeb_tests::toggle;

namespace {

Polynomial xvar(size_t n, size_t axis) { return Polynomial::variable(n, axis); }

// independent drift evaluation straight from the propensities
Rational drift_at(const ReactionNetwork& net, const Polynomial& w,
                  const Rational& k2, const State& x) {
  Rational s = k2 * w.eval(x);
  for (size_t j = 0; j < net.reaction_count(); ++j) {
    State y = x;
    const auto& v = net.reaction(j).net();
    for (size_t i = 0; i < y.size(); ++i) y[i] += v[i];
    s += net.propensity_eval(j, x) * (w.eval(y) - w.eval(x));
  }
  return s;
}

}  // namespace

TEST_CASE("cubic one-species drift: negative leading term certified") {
  auto net = schlogl_e3();
  auto rep = drift_report(net, xvar(1, 0), Rational(1) / 2, 25);
  CHECK(rep.verdict == DriftVerdict::VerifiedOnBoxLeadingNegative);
  REQUIRE(rep.rays.size() == 2);
  for (const auto& r : rep.rays) {
    CHECK(r.behavior == "negative");
    CHECK(r.degree == 3);
    CHECK(r.coeff == Rational(-1));  // -k2 (d-2) with d = 3
  }
  CHECK(rep.states_checked == 26);
  CHECK(rep.tail_constant_heuristic.has_value());
  CHECK(*rep.tail_constant_heuristic == doctest::Approx(to_double(rep.k1) * 2));

  // reported K_1 is the exact grid maximum and closes the inequality exactly
  Rational m = drift_at(net, rep.w, rep.k2, {0});
  for (int64_t x = 0; x <= 25; ++x) {
    Rational v = drift_at(net, rep.w, rep.k2, {x});
    CHECK(v <= rep.k1);
    if (v > m) m = v;
  }
  CHECK(m == rep.k1);
  CHECK(drift_at(net, rep.w, rep.k2, rep.argmax) == rep.k1);
}

TEST_CASE("quartic weight keeps the negative top term") {
  auto net = schlogl_e3();
  auto rep = drift_report(net, xvar(1, 0).pow(2), Rational(1) / 2, 25);
  CHECK(rep.verdict == DriftVerdict::VerifiedOnBoxLeadingNegative);
  CHECK(rep.rays[0].degree == 4);
  CHECK(rep.rays[0].coeff == Rational(-2));  // -k2 (d-2) with d = 4
}

TEST_CASE("K_1 is non-decreasing in the box radius") {
  auto net = parse_network("species: X\n0 -> X @ mass_action(1)\nX -> 0 @ x1\n");
  auto w = xvar(1, 0);
  Rational prev;
  for (int64_t r : {5, 10, 20, 40}) {
    // Qw + 2w = 1 + x is unbounded: Failed, but the box maximum is still reported
    auto rep = drift_report(net, w, 2, r);
    CHECK(rep.verdict == DriftVerdict::Failed);
    CHECK(rep.k1 == Rational(1 + r));
    CHECK(rep.k1 >= prev);
    prev = rep.k1;
  }

  // at K_2 = 1 the drift is exactly 1 everywhere: bounded, not certified
  auto flat = drift_report(net, w, 1, 30);
  CHECK(flat.verdict == DriftVerdict::BoxOnly);
  CHECK(flat.k1 == Rational(1));
  CHECK(!flat.tail_constant_heuristic.has_value());
  CHECK(flat.rays[0].behavior == "bounded");

  // at K_2 = 1/2 the leading term flips negative
  auto ok = drift_report(net, w, Rational(1) / 2, 30);
  CHECK(ok.verdict == DriftVerdict::VerifiedOnBoxLeadingNegative);
  CHECK(ok.k1 == Rational(1));
  CHECK(ok.argmax == State{0});
}

TEST_CASE("two-species switch with rational propensities") {
  auto net = toggle();
  Polynomial w = (xvar(2, 0) + xvar(2, 1)).pow(3);
  auto rep = drift_report(net, w, Rational(3) / 2, 30, 4);
  CHECK(rep.verdict == DriftVerdict::VerifiedOnBoxLeadingNegative);
  REQUIRE(rep.rays.size() == 3);
  for (const auto& r : rep.rays) CHECK(r.behavior == "negative");

  // exact re-verification on a coarse independent grid
  for (int64_t a = 0; a <= 30; a += 6)
    for (int64_t b = 0; b <= 30; b += 6)
      CHECK(drift_at(net, w, rep.k2, {a, b}) <= rep.k1);

  // an overlarge K_2 makes the top term positive
  auto bad = drift_report(net, w, 10, 10);
  CHECK(bad.verdict == DriftVerdict::Failed);
  CHECK(bad.reason.find("grows") != std::string::npos);

  // deterministic across thread counts
  auto seq = drift_report(net, w, Rational(3) / 2, 30, 1);
  CHECK(seq.k1 == rep.k1);
  CHECK(seq.argmax == rep.argmax);
}

TEST_CASE("validation problems become Failed verdicts, never exceptions") {
  auto net = schlogl_e3();
  auto w = xvar(1, 0);

  CHECK(drift_report(net, w, 0, 10).verdict == DriftVerdict::Failed);
  CHECK(drift_report(net, w, -1, 10).verdict == DriftVerdict::Failed);
  CHECK(drift_report(net, w, 1, -3).verdict == DriftVerdict::Failed);
  CHECK(drift_report(net, Polynomial(1), 1, 10).verdict == DriftVerdict::Failed);
  CHECK(drift_report(net, Polynomial::constant(1, 5), 1, 10).verdict ==
        DriftVerdict::Failed);
  CHECK(drift_report(net, xvar(2, 0), 1, 10).verdict == DriftVerdict::Failed);

  // no growth along the second axis
  auto rep = drift_report(toggle(), xvar(2, 0), 1, 10);
  CHECK(rep.verdict == DriftVerdict::Failed);
  CHECK(rep.reason.find("S2") != std::string::npos);

  // negative leading coefficient
  Polynomial bad = xvar(1, 0) - Polynomial::monomial(MultiIndex{2}, 1);
  CHECK(drift_report(net, bad, 1, 10).verdict == DriftVerdict::Failed);

  // box bigger than the cap
  CHECK(drift_report(net, w, 1, 1000, 1, 100).verdict == DriftVerdict::Failed);

  // a network with no reactions cannot absorb K_2 w
  ReactionNetwork empty({"X"}, {});
  auto zero = drift_report(empty, w, 1, 12);
  CHECK(zero.verdict == DriftVerdict::Failed);
  CHECK(zero.rays[0].behavior == "growing");
  CHECK(zero.k1 == Rational(12));  // max of K_2 w over the box, still reported
}

TEST_CASE("json report round-trips the key fields") {
  auto net = schlogl_e3();
  auto rep = drift_report(net, xvar(1, 0), Rational(1) / 2, 25);
  auto j = nlohmann::json::parse(rep.to_json());
  CHECK(j["verdict"] == "verified_on_box_leading_negative");
  CHECK(j["k2_exact"] == "1/2");
  CHECK(j["box_radius"] == 25);
  CHECK(j["k1"].get<double>() == doctest::Approx(to_double(rep.k1)));
  CHECK(j["rays"].size() == 2);
  CHECK(j["rays"][0]["behavior"] == "negative");
  CHECK(j["tail_constant_heuristic"].get<double>() ==
        doctest::Approx(*rep.tail_constant_heuristic));
  CHECK(j.contains("tail_constant_note"));

  auto failed = drift_report(net, xvar(1, 0), 0, 10);
  auto jf = nlohmann::json::parse(failed.to_json());
  CHECK(jf["verdict"] == "failed");
  CHECK(!jf.contains("k1"));
  CHECK(jf.contains("reason"));
}
