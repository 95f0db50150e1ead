#include "cmeb/ssa.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace cmeb {

namespace {

uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(uint64_t seed, uint64_t stream)
    : key_(mix64(seed ^ mix64(stream))) {}

uint64_t CounterRng::next_u64() { return mix64(key_ + 0xd1b54a32d192ed03ull * ++ctr_); }

double CounterRng::next_uniform() {
  return ((next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

CounterRng CounterRng::split(uint64_t stream) const {
  CounterRng r(0);
  r.key_ = mix64(key_ ^ mix64(stream + 0x9e3779b97f4a7c15ull));
  r.ctr_ = 0;
  return r;
}

SimConfig SimConfig::point(State x0, double t_end, uint64_t seed) {
  SimConfig cfg;
  cfg.initial[std::move(x0)] = 1.0;
  cfg.t_end = t_end;
  cfg.seed = seed;
  return cfg;
}

namespace {

void validate(const ReactionNetwork& net, const SimConfig& cfg) {
  if (!(cfg.t_end > 0)) throw std::invalid_argument("t_end must be positive");
  if (!(cfg.burn_in >= 0 && cfg.burn_in < 1))
    throw std::invalid_argument("burn-in fraction must lie in [0, 1)");
  if (cfg.initial.empty()) throw std::invalid_argument("empty initial distribution");
  if (cfg.max_events == 0) throw std::invalid_argument("event cap must be positive");
  double total = 0;
  for (const auto& [x, wgt] : cfg.initial) {
    if (x.size() != net.n()) throw std::invalid_argument("initial state arity mismatch");
    if (!net.state_valid(x)) throw std::invalid_argument("invalid initial state");
    if (!(wgt > 0) || !std::isfinite(wgt))
      throw std::invalid_argument("initial weights must be positive");
    total += wgt;
  }
  (void)total;
}

// flat double-precision propensity evaluators for the hot loop
struct CompiledPoly {
  struct Term {
    double c;
    std::vector<std::pair<uint32_t, uint32_t>> pw;  // (axis, exponent)
  };
  std::vector<Term> terms;

  static CompiledPoly from(const Polynomial& p) {
    CompiledPoly cp;
    for (const auto& [alpha, coeff] : p.terms()) {
      Term t{to_double(coeff), {}};
      for (size_t i = 0; i < alpha.vars(); ++i)
        if (alpha.e[i] > 0) t.pw.push_back({(uint32_t)i, alpha.e[i]});
      cp.terms.push_back(std::move(t));
    }
    return cp;
  }

  double eval(const State& x) const {
    double s = 0;
    for (const auto& t : terms) {
      double v = t.c;
      for (auto [i, e] : t.pw) {
        double b = (double)x[i], p = 1;
        for (uint32_t k = 0; k < e; ++k) p *= b;
        v *= p;
      }
      s += v;
    }
    return s;
  }
};

struct CompiledPropensity {
  CompiledPoly num;
  std::vector<CompiledPoly> den;

  static CompiledPropensity from(const RationalFunction& f) {
    CompiledPropensity cp;
    cp.num = CompiledPoly::from(f.num());
    for (const auto& g : f.den_factors()) cp.den.push_back(CompiledPoly::from(g));
    return cp;
  }

  double eval(const State& x) const {
    double v = num.eval(x);
    for (const auto& g : den) v /= g.eval(x);
    return v;
  }
};

struct Stepper {
  const ReactionNetwork& net;
  std::vector<CompiledPropensity> props;
  std::vector<std::vector<int64_t>> jumps;
  std::vector<double> a;  // scratch

  explicit Stepper(const ReactionNetwork& n) : net(n) {
    for (size_t j = 0; j < net.reaction_count(); ++j) {
      props.push_back(CompiledPropensity::from(net.reaction(j).propensity));
      jumps.push_back(net.reaction(j).net());
    }
    a.resize(props.size());
  }

  double exit_rate(const State& x) {
    double q = 0;
    for (size_t j = 0; j < props.size(); ++j) {
      a[j] = std::max(0.0, props[j].eval(x));
      q += a[j];
    }
    return q;
  }

  // advance x in place; returns the holding time, or -1 when absorbing
  double step(State& x, CounterRng& rng) {
    double q = exit_rate(x);
    if (!(q > 0)) {
      if (!std::isfinite(q)) throw std::runtime_error("non-finite exit rate");
      return -1;
    }
    double dt = -std::log(rng.next_uniform()) / q;
    double u = rng.next_uniform() * q;
    size_t pick = 0;
    bool found = false;
    double acc = 0;
    for (size_t j = 0; j < props.size(); ++j) {
      if (a[j] <= 0) continue;
      pick = j;
      acc += a[j];
      if (u <= acc) {
        found = true;
        break;
      }
    }
    (void)found;  // fp shortfall lands on the last positive channel
    const auto& v = jumps[pick];
    for (size_t i = 0; i < x.size(); ++i) x[i] += v[i];
    return dt;
  }
};

State sample_initial(const SimConfig& cfg, CounterRng& rng) {
  double total = 0;
  for (const auto& [x, wgt] : cfg.initial) total += wgt;
  double u = rng.next_uniform() * total;
  double acc = 0;
  for (const auto& [x, wgt] : cfg.initial) {
    acc += wgt;
    if (u <= acc) return x;
  }
  return cfg.initial.rbegin()->first;
}

}  // namespace

Trajectory simulate(const ReactionNetwork& net, const SimConfig& cfg) {
  validate(net, cfg);
  CounterRng rng(cfg.seed, 0);
  Stepper stepper(net);

  Trajectory tr;
  State x = sample_initial(cfg, rng);
  double t = 0;
  tr.times.push_back(0.0);
  tr.states.push_back(x);

  while (true) {
    if (tr.events >= cfg.max_events) {
      tr.capped = true;
      break;
    }
    State next = x;
    double dt = stepper.step(next, rng);
    if (dt < 0) break;  // absorbing: holds forever
    t += dt;
    if (t >= cfg.t_end) break;
    x = std::move(next);
    tr.times.push_back(t);
    tr.states.push_back(x);
    ++tr.events;
  }
  return tr;
}

namespace {

struct TrajectoryTally {
  std::vector<std::map<State, double>> batch;  // duration per key per batch
  double observed = 0;
  size_t events = 0;
  bool capped = false;
};

TrajectoryTally run_one(const ReactionNetwork& net, const SimConfig& cfg,
                        const std::function<State(const State&)>& partition,
                        uint64_t stream, size_t batches) {
  CounterRng rng = CounterRng(cfg.seed, 0).split(stream);
  Stepper stepper(net);
  TrajectoryTally tally;
  tally.batch.resize(batches);

  const double t0 = cfg.burn_in * cfg.t_end;
  const double window = cfg.t_end - t0;
  const double bw = window / (double)batches;

  State x = sample_initial(cfg, rng);
  double t = 0;

  auto credit = [&](const State& s, double from, double to) {
    from = std::max(from, t0);
    to = std::min(to, cfg.t_end);
    if (to <= from) return;
    State key = partition ? partition(s) : s;
    size_t b0 = (size_t)std::min((double)(batches - 1), (from - t0) / bw);
    size_t b1 = (size_t)std::min((double)(batches - 1), (to - t0) / bw);
    for (size_t b = b0; b <= b1; ++b) {
      double lo = t0 + (double)b * bw, hi = t0 + (double)(b + 1) * bw;
      double d = std::min(to, hi) - std::max(from, lo);
      if (d > 0) tally.batch[b][key] += d;
    }
    tally.observed += to - from;
  };

  while (t < cfg.t_end) {
    if (tally.events >= cfg.max_events) {
      tally.capped = true;
      break;
    }
    State next = x;
    double dt = stepper.step(next, rng);
    if (dt < 0) {
      credit(x, t, cfg.t_end);
      t = cfg.t_end;
      break;
    }
    credit(x, t, t + dt);
    t += dt;
    x = std::move(next);
    ++tally.events;
  }
  return tally;
}

}  // namespace

OccupationHistogram occupation_histogram(const ReactionNetwork& net, const SimConfig& cfg,
                                         const std::function<State(const State&)>& partition,
                                         size_t trajectories, size_t threads,
                                         size_t batches) {
  validate(net, cfg);
  if (trajectories == 0) throw std::invalid_argument("need at least one trajectory");
  batches = std::max<size_t>(1, batches);

  std::vector<TrajectoryTally> tallies(trajectories);
  threads = std::max<size_t>(1, std::min(threads, trajectories));
  if (threads == 1) {
    for (size_t k = 0; k < trajectories; ++k)
      tallies[k] = run_one(net, cfg, partition, k, batches);
  } else {
    std::vector<std::thread> pool;
    for (size_t tix = 0; tix < threads; ++tix)
      pool.emplace_back([&, tix]() {
        for (size_t k = tix; k < trajectories; k += threads)
          tallies[k] = run_one(net, cfg, partition, k, batches);
      });
    for (auto& th : pool) th.join();
  }

  OccupationHistogram h;
  std::map<State, std::vector<double>> fractions;  // per key, batch means
  const double bw = (cfg.t_end - cfg.burn_in * cfg.t_end) / (double)batches;
  size_t live_batches = 0;
  for (const auto& tally : tallies) {
    h.events += tally.events;
    h.capped = h.capped || tally.capped;
    h.total_time += tally.observed;
    for (size_t b = 0; b < batches; ++b) {
      double covered = 0;
      for (const auto& [key, d] : tally.batch[b]) covered += d;
      if (covered < bw * 0.999) continue;  // capped mid-batch: drop the stub
      ++live_batches;
      for (const auto& [key, d] : tally.batch[b]) {
        auto& v = fractions[key];
        v.resize(live_batches, 0.0);
        v[live_batches - 1] = d / covered;
      }
    }
  }
  if (live_batches == 0) throw std::runtime_error("no complete observation window");

  for (auto& [key, v] : fractions) {
    v.resize(live_batches, 0.0);
    double mean = 0;
    for (double f : v) mean += f;
    mean /= (double)live_batches;
    h.weight[key] = mean;
    if (live_batches > 1) {
      double s2 = 0;
      for (double f : v) s2 += (f - mean) * (f - mean);
      h.se[key] = std::sqrt(s2 / (double)(live_batches - 1) / (double)live_batches);
    } else {
      h.se[key] = 0;
    }
  }
  return h;
}

void write_histogram_csv(std::ostream& os, const OccupationHistogram& h,
                         const std::vector<std::string>& columns) {
  size_t n = h.weight.empty() ? columns.size() : h.weight.begin()->first.size();
  for (size_t i = 0; i < n; ++i)
    os << (i < columns.size() ? columns[i] : "x" + std::to_string(i + 1)) << ",";
  os << "fraction,se\n";
  for (const auto& [key, wgt] : h.weight) {
    for (int64_t c : key) os << c << ",";
    auto it = h.se.find(key);
    os << wgt << "," << (it == h.se.end() ? 0.0 : it->second) << "\n";
  }
}

void write_trajectory_log(std::ostream& os, const Trajectory& t) {
  auto put_le = [&](uint64_t v, size_t bytes) {
    char buf[8];
    for (size_t i = 0; i < bytes; ++i) buf[i] = (char)((v >> (8 * i)) & 0xff);
    os.write(buf, (std::streamsize)bytes);
  };
  for (size_t k = 0; k < t.times.size(); ++k) {
    uint64_t bits;
    static_assert(sizeof(double) == 8);
    std::memcpy(&bits, &t.times[k], 8);
    put_le(bits, 8);
    for (int64_t c : t.states[k]) put_le((uint64_t)(uint32_t)c, 4);
  }
}

}  // namespace cmeb
