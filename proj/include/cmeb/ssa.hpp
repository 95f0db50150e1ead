#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>

#include "cmeb/model.hpp"

namespace cmeb {

// Counter-based generator: the k-th output is a fixed 64-bit mix of
// (key, k), so streams with distinct keys are independent and a stream can
// be handed to a worker without shared state.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed, uint64_t stream = 0);

  uint64_t next_u64();
  double next_uniform();  // strictly inside (0, 1)
  CounterRng split(uint64_t stream) const;  // derived independent stream

 private:
  uint64_t key_ = 0, ctr_ = 0;
};

struct SimConfig {
  std::map<State, double> initial;  // finite mixture; weights positive
  double t_end = 0;
  double burn_in = 0.2;  // fraction of t_end discarded (heuristic default)
  uint64_t seed = 1;
  uint64_t max_events = 100'000'000;  // explosion cap per trajectory

  static SimConfig point(State x0, double t_end, uint64_t seed = 1);
};

struct Trajectory {
  std::vector<double> times;  // jump epochs starting at 0, strictly increasing
  std::vector<State> states;  // aligned with times
  size_t events = 0;
  bool capped = false;  // event cap hit before t_end: possible explosion
};

// Gillespie direct method: exponential holding time with mean 1/q(x), jump
// chosen by cumulative propensity inversion. Absorbing states hold forever.
Trajectory simulate(const ReactionNetwork& net, const SimConfig& cfg);

// Time fraction spent per state (or per cell when a partition is given) over
// the post burn-in window, pooled across trajectories. se holds batch-means
// standard errors; merging is ordered by trajectory index, so results are
// bit-identical for any thread count.
struct OccupationHistogram {
  std::map<State, double> weight;
  std::map<State, double> se;
  double total_time = 0;  // pooled observed window
  size_t events = 0;
  bool capped = false;  // any trajectory hit the event cap
};

OccupationHistogram occupation_histogram(
    const ReactionNetwork& net, const SimConfig& cfg,
    const std::function<State(const State&)>& partition = {}, size_t trajectories = 1,
    size_t threads = 1, size_t batches = 16);

// x1,..,xn,fraction,se rows; column names default to the species when given
void write_histogram_csv(std::ostream& os, const OccupationHistogram& h,
                         const std::vector<std::string>& columns = {});

// fixed little-endian records: f64 time then u32 per species
void write_trajectory_log(std::ostream& os, const Trajectory& t);

}  // namespace cmeb
