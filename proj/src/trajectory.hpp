#ifndef HSIM_TRAJECTORY_HPP
#define HSIM_TRAJECTORY_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

#include "netmodel.hpp"

namespace hsim {

/// Counters accumulated along a run. Clamps and thinning rejections stay zero
/// for exact (SSA) runs.
struct Diagnostics {
  std::vector<std::uint64_t> events_per_reaction;
  std::uint64_t thinned = 0;
  std::uint64_t clamps = 0;
  std::uint32_t retries = 0;
  double lambda_max_used = 0.0;

  std::uint64_t events_total() const {
    std::uint64_t n = 0;
    for (std::uint64_t c : events_per_reaction) n += c;
    return n;
  }

  void merge(const Diagnostics& other) {
    if (events_per_reaction.size() < other.events_per_reaction.size())
      events_per_reaction.resize(other.events_per_reaction.size(), 0);
    for (std::size_t i = 0; i < other.events_per_reaction.size(); ++i)
      events_per_reaction[i] += other.events_per_reaction[i];
    thinned += other.thinned;
    clamps += other.clamps;
    retries += other.retries;
    lambda_max_used = std::max(lambda_max_used, other.lambda_max_used);
  }
};

struct TrajectoryEvent {
  double t;
  std::size_t reaction;
};

/// Sampled path: states recorded at the requested grid times (strictly
/// increasing, first sample at t=0 with the initial state), plus an optional
/// event log.
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<TrajectoryEvent> events;
  bool events_recorded = false;
  Diagnostics diagnostics;
};

}  // namespace hsim

#endif  // HSIM_TRAJECTORY_HPP
