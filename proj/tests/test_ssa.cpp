#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "cmeb/birthdeath.hpp"
#include "cmeb/ssa.hpp"
#include "doctest.h"
#include "test_models.hpp"

using namespace cmeb;
using cmeb_tests::mm_infinity;
using cmeb_tests::schlogl_uni;
using cmeb_tests::two_class;

TEST_CASE("counter generator: streams and determinism") {
  CounterRng a(42), b(42), c(43);
  for (int i = 0; i < 64; ++i) {
    uint64_t va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
  CounterRng s0 = CounterRng(7).split(0), s1 = CounterRng(7).split(1);
  size_t agree = 0;
  for (int i = 0; i < 64; ++i) agree += s0.next_u64() == s1.next_u64();
  CHECK(agree == 0);

  CounterRng u(5);
  for (int i = 0; i < 1000; ++i) {
    double v = u.next_uniform();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("config validation") {
  auto net = mm_infinity("3", "1");
  auto cfg = SimConfig::point({0}, 10.0);
  CHECK_NOTHROW(simulate(net, cfg));

  auto bad = cfg;
  bad.t_end = 0;
  CHECK_THROWS_AS(simulate(net, bad), std::invalid_argument);
  bad = cfg;
  bad.burn_in = 1.0;  // zero-length observation window
  CHECK_THROWS_AS(occupation_histogram(net, bad), std::invalid_argument);
  bad = cfg;
  bad.initial.clear();
  CHECK_THROWS_AS(simulate(net, bad), std::invalid_argument);
  bad = cfg;
  bad.initial = {{{0}, -1.0}};
  CHECK_THROWS_AS(simulate(net, bad), std::invalid_argument);
  bad = cfg;
  bad.initial = {{{0, 0}, 1.0}};
  CHECK_THROWS_AS(simulate(net, bad), std::invalid_argument);
}

TEST_CASE("trajectories are reproducible and structurally valid") {
  auto net = schlogl_uni();
  auto cfg = SimConfig::point({10}, 2.0, 99);
  auto t1 = simulate(net, cfg);
  auto t2 = simulate(net, cfg);
  CHECK(t1.times == t2.times);
  CHECK(t1.states == t2.states);
  REQUIRE(t1.times.size() == t1.states.size());
  REQUIRE(t1.times.size() > 10);

  std::vector<std::vector<int64_t>> jumps;
  for (size_t j = 0; j < net.reaction_count(); ++j) jumps.push_back(net.reaction(j).net());
  for (size_t k = 1; k < t1.times.size(); ++k) {
    CHECK(t1.times[k] > t1.times[k - 1]);
    std::vector<int64_t> d{t1.states[k][0] - t1.states[k - 1][0]};
    CHECK(std::count(jumps.begin(), jumps.end(), d) > 0);
  }
}

TEST_CASE("absorbing start yields a single-state path") {
  auto net = parse_network("species: X\nX -> 0 @ x1\n");
  auto tr = simulate(net, SimConfig::point({0}, 50.0));
  CHECK(tr.times.size() == 1);
  CHECK(tr.states[0] == State{0});
  CHECK(tr.events == 0);
  CHECK(!tr.capped);

  auto h = occupation_histogram(net, SimConfig::point({0}, 50.0));
  REQUIRE(h.weight.size() == 1);
  CHECK(h.weight.at({0}) == doctest::Approx(1.0));
}

TEST_CASE("event cap reports a possible explosion") {
  auto net = parse_network("species: X\n0 -> X @ mass_action(2)\n");
  auto cfg = SimConfig::point({0}, 1e9, 3);
  cfg.max_events = 500;
  auto tr = simulate(net, cfg);
  CHECK(tr.capped);
  CHECK(tr.events == 500);

  // cap lands after several full batches: flagged but still normalized
  cfg = SimConfig::point({0}, 1e4, 3);
  cfg.burn_in = 0;
  cfg.max_events = 10000;
  auto h = occupation_histogram(net, cfg);
  CHECK(h.capped);
  double mass = 0;
  for (const auto& [k, w] : h.weight) mass += w;
  CHECK(mass == doctest::Approx(1.0));

  // cap before the window opens leaves nothing to observe
  cfg.burn_in = 0.9;
  cfg.max_events = 100;
  CHECK_THROWS_AS(occupation_histogram(net, cfg), std::runtime_error);
}

TEST_CASE("holding times have the right mean") {
  auto net = parse_network("species: X\n0 -> X @ mass_action(2)\n");
  auto cfg = SimConfig::point({0}, 1e4, 11);
  auto tr = simulate(net, cfg);
  REQUIRE(tr.events >= 10000);
  double mean = tr.times.back() / (double)(tr.times.size() - 1);
  // q = 2 everywhere: mean holding 0.5, comparison at ~3 standard errors
  CHECK(mean == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("two-state chain matches the closed-form occupation pair") {
  auto net = parse_network("species: X\n0 -> X @ 3 - 3*x1\nX -> 0 @ 2*x1\n");
  auto cfg = SimConfig::point({0}, 2000.0, 17);
  auto h = occupation_histogram(net, cfg);
  REQUIRE(h.weight.size() == 2);
  CHECK(h.weight.at({0}) == doctest::Approx(0.4).epsilon(0.075));
  CHECK(h.weight.at({1}) == doctest::Approx(0.6).epsilon(0.05));
  CHECK(h.weight.at({0}) + h.weight.at({1}) == doctest::Approx(1.0));
  CHECK(h.se.at({0}) > 0);
  CHECK(h.se.at({0}) < 0.05);
}

TEST_CASE("long-run occupation approaches the stationary law") {
  auto net = mm_infinity("3", "1");
  auto cfg = SimConfig::point({3}, 5000.0, 23);
  auto h = occupation_histogram(net, cfg);
  double mean = 0;
  for (const auto& [k, w] : h.weight) mean += (double)k[0] * w;
  CHECK(mean == doctest::Approx(3.0).epsilon(0.05));

  auto uni = schlogl_uni();
  auto pi = analytic_pi(BirthDeathModel::from_network(uni), 1e-13);
  auto hu = occupation_histogram(uni, SimConfig::point({17}, 2000.0, 5));
  double tv = 0;
  for (int64_t x = 0; x <= pi.radius; ++x) {
    auto it = hu.weight.find({x});
    tv += std::abs((it == hu.weight.end() ? 0.0 : it->second) - pi(x));
  }
  CHECK(tv / 2 < 0.05);
}

TEST_CASE("histograms are bit-identical across seeds and thread counts") {
  auto net = two_class();
  auto cfg = SimConfig::point({0, 0}, 200.0, 31);
  auto a = occupation_histogram(net, cfg, {}, 4, 1);
  auto b = occupation_histogram(net, cfg, {}, 4, 4);
  CHECK(a.weight == b.weight);
  CHECK(a.se == b.se);
  CHECK(a.events == b.events);

  auto c = occupation_histogram(net, cfg, {}, 4, 2);
  CHECK(a.weight == c.weight);
}

TEST_CASE("partition maps states onto cells") {
  auto net = two_class();
  auto cfg = SimConfig::point({0, 0}, 500.0, 7);
  auto h = occupation_histogram(
      net, cfg, [](const State& x) { return State{x[0]}; });
  double mass = 0;
  for (const auto& [k, w] : h.weight) {
    REQUIRE(k.size() == 1);
    CHECK(k[0] % 2 == 0);  // pair jumps preserve the initial parity
    mass += w;
  }
  CHECK(mass == doctest::Approx(1.0));
}

TEST_CASE("writers") {
  auto net = two_class();
  auto h = occupation_histogram(net, SimConfig::point({0, 0}, 100.0, 2));
  std::ostringstream csv;
  write_histogram_csv(csv, h, net.species());
  std::istringstream in(csv.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "S1,S2,fraction,se");
  size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == h.weight.size());

  auto tr = simulate(net, SimConfig::point({0, 0}, 5.0, 2));
  std::ostringstream bin(std::ios::binary);
  write_trajectory_log(bin, tr);
  CHECK(bin.str().size() == tr.times.size() * (8 + 4 * net.n()));
  double t0;
  std::memcpy(&t0, bin.str().data(), 8);
  CHECK(t0 == 0.0);
}
