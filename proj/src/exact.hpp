#ifndef HSIM_EXACT_HPP
#define HSIM_EXACT_HPP

#include <optional>
#include <span>

#include "netmodel.hpp"
#include "rng.hpp"
#include "trajectory.hpp"

namespace hsim {

struct SsaStep {
  double dt;
  std::size_t reaction;
};

/// One Gillespie direct-method step from state s: waiting time
/// dt ~ Exponential(sum a_r) and the fired channel picked proportionally to
/// a_r. Returns nullopt when every propensity is zero (exhausted).
std::optional<SsaStep> ssa_step(const ReactionNetwork& net, const State& s, Rng& rng);

/// Exact simulation until t_max (or exhaustion), recording the state at each
/// sample_grid point with the cadlag convention: the sample at grid time t is
/// the state after any event at exactly t. A sample at t=0 is always recorded
/// first. sample_grid must be sorted, within [0, t_max].
Trajectory ssa_simulate(const ReactionNetwork& net, const State& s0, double t_max,
                        std::span<const double> sample_grid, Rng& rng,
                        bool record_events = false);

/// Brute-force solution of the truncated forward (master) equation on the box
/// {0..cap}^N. Test oracle for tiny networks; independent of the stochastic
/// engines (dense RK4 time stepping with verified step halving).
struct CmeResult {
  std::int64_t cap = 0;
  std::size_t species_count = 0;
  std::vector<double> probabilities;  // over the enumerated box
  double leakage = 0.0;               // probability mass lost past the cap

  std::size_t index_of(std::span<const std::int64_t> counts) const;
  double probability(std::span<const std::int64_t> counts) const;
};

/// Throws std::invalid_argument when the box exceeds 1e5 states and
/// SimulationError when the final leakage exceeds max_leakage.
CmeResult cme_distribution(const ReactionNetwork& net, const State& s0, double t,
                           std::int64_t state_cap, double max_leakage = 0.05);

}  // namespace hsim

#endif  // HSIM_EXACT_HPP
