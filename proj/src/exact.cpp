#include "exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hsim {

namespace {

void check_sample_grid(std::span<const double> grid, double t_max) {
  double prev = -std::numeric_limits<double>::infinity();
  for (double g : grid) {
    if (!(g >= 0.0) || g > t_max)
      throw std::invalid_argument("sample grid point outside [0, t_max]");
    if (g < prev) throw std::invalid_argument("sample grid must be sorted");
    prev = g;
  }
}

}  // namespace

std::optional<SsaStep> ssa_step(const ReactionNetwork& net, const State& s, Rng& rng) {
  const std::size_t R = net.reactions().size();
  double total = 0.0;
  // Direct method: all propensities recomputed every step.
  std::vector<double> a(R);
  for (std::size_t r = 0; r < R; ++r) {
    a[r] = net.propensity(r, s);
    total += a[r];
  }
  if (total <= 0.0) return std::nullopt;
  const double dt = rng.exponential(total);
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  std::size_t fired = R;
  for (std::size_t r = 0; r < R; ++r) {
    acc += a[r];
    if (u < acc) {
      fired = r;
      break;
    }
  }
  if (fired == R) {  // rounding pushed u past the last bin
    for (std::size_t r = R; r-- > 0;) {
      if (a[r] > 0.0) {
        fired = r;
        break;
      }
    }
  }
  return SsaStep{dt, fired};
}

Trajectory ssa_simulate(const ReactionNetwork& net, const State& s0, double t_max,
                        std::span<const double> sample_grid, Rng& rng,
                        bool record_events) {
  if (!(t_max > 0)) throw std::invalid_argument("t_max must be positive");
  check_sample_grid(sample_grid, t_max);

  const std::size_t R = net.reactions().size();
  Trajectory traj;
  traj.events_recorded = record_events;
  traj.diagnostics.events_per_reaction.assign(R, 0);

  State s = s0;
  s.t = 0.0;
  traj.times.push_back(0.0);
  traj.states.push_back(s);
  std::size_t gi = 0;
  while (gi < sample_grid.size() && sample_grid[gi] <= 0.0) ++gi;

  std::vector<double> a(R);
  double t = 0.0;
  while (true) {
    double total = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      a[r] = net.propensity(r, s);
      total += a[r];
    }
    double te = std::numeric_limits<double>::infinity();
    std::size_t fired = R;
    if (total > 0.0) {
      te = t + rng.exponential(total);
      const double u = rng.uniform01() * total;
      double acc = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        acc += a[r];
        if (u < acc) {
          fired = r;
          break;
        }
      }
      if (fired == R) {
        for (std::size_t r = R; r-- > 0;)
          if (a[r] > 0.0) {
            fired = r;
            break;
          }
      }
    }
    // Samples strictly before the next event hold the current state.
    while (gi < sample_grid.size() && sample_grid[gi] < te) {
      s.t = sample_grid[gi];
      traj.times.push_back(sample_grid[gi]);
      traj.states.push_back(s);
      ++gi;
    }
    if (te > t_max) break;  // also covers exhaustion
    net.apply_stoichiometry(s, fired);
    ++traj.diagnostics.events_per_reaction[fired];
    if (record_events) traj.events.push_back({te, fired});
    t = te;
    s.t = t;
  }
  // Any remaining grid points sit at/after the last event; the state holds.
  while (gi < sample_grid.size()) {
    s.t = sample_grid[gi];
    traj.times.push_back(sample_grid[gi]);
    traj.states.push_back(s);
    ++gi;
  }
  return traj;
}

std::size_t CmeResult::index_of(std::span<const std::int64_t> counts) const {
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    idx += static_cast<std::size_t>(counts[i]) * stride;
    stride *= static_cast<std::size_t>(cap + 1);
  }
  return idx;
}

double CmeResult::probability(std::span<const std::int64_t> counts) const {
  for (std::int64_t c : counts)
    if (c < 0 || c > cap) return 0.0;
  return probabilities[index_of(counts)];
}

CmeResult cme_distribution(const ReactionNetwork& net, const State& s0, double t,
                           std::int64_t state_cap, double max_leakage) {
  if (t < 0) throw std::invalid_argument("t must be nonnegative");
  if (state_cap < 0) throw std::invalid_argument("state_cap must be nonnegative");
  const std::size_t N = net.species().size();
  const std::size_t R = net.reactions().size();

  double num_states_d = 1.0;
  for (std::size_t i = 0; i < N; ++i) num_states_d *= static_cast<double>(state_cap + 1);
  if (num_states_d > 1e5)
    throw std::invalid_argument("state space too large (cap^N exceeds 1e5 states)");
  const std::size_t S = static_cast<std::size_t>(num_states_d);

  // Initial state must be an integer point inside the box.
  std::vector<std::int64_t> init(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double v = net.value(s0, i);
    if (v != std::floor(v))
      throw std::invalid_argument("CME oracle requires integer initial counts");
    init[i] = static_cast<std::int64_t>(v);
    if (init[i] < 0 || init[i] > state_cap)
      throw std::invalid_argument("initial state outside the enumerated box");
  }

  CmeResult result;
  result.cap = state_cap;
  result.species_count = N;
  result.probabilities.assign(S, 0.0);

  // Sparse generator: per state, a list of (rate, target or npos for leaks).
  constexpr std::size_t kLeak = static_cast<std::size_t>(-1);
  struct Move {
    double rate;
    std::size_t target;
  };
  std::vector<std::vector<Move>> moves(S);
  std::vector<std::int64_t> counts(N, 0);
  State scratch = net.initial_state();
  double q_max = 0.0;
  for (std::size_t idx = 0; idx < S; ++idx) {
    // decode counts and fill the scratch state
    {
      std::size_t rem = idx;
      for (std::size_t i = 0; i < N; ++i) {
        counts[i] = static_cast<std::int64_t>(rem % static_cast<std::size_t>(state_cap + 1));
        rem /= static_cast<std::size_t>(state_cap + 1);
        if (net.is_continuous(i))
          scratch.x[net.slot(i)] = static_cast<double>(counts[i]);
        else
          scratch.sigma[net.slot(i)] = counts[i];
      }
    }
    double outflow = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      const double a = net.propensity(r, scratch);
      if (a <= 0.0) continue;
      std::size_t target = 0;
      std::size_t stride = 1;
      bool leak = false;
      for (std::size_t i = 0; i < N; ++i) {
        const std::int64_t c = counts[i] + net.reactions()[r].net_change(i);
        if (c < 0 || c > state_cap) {
          leak = true;
          break;
        }
        target += static_cast<std::size_t>(c) * stride;
        stride *= static_cast<std::size_t>(state_cap + 1);
      }
      moves[idx].push_back({a, leak ? kLeak : target});
      outflow += a;
    }
    q_max = std::max(q_max, outflow);
  }

  result.probabilities[result.index_of(init)] = 1.0;
  if (t == 0.0 || q_max == 0.0) {
    result.leakage = 0.0;
    return result;
  }

  auto apply_generator = [&](const std::vector<double>& p, std::vector<double>& dp) {
    std::fill(dp.begin(), dp.end(), 0.0);
    for (std::size_t idx = 0; idx < S; ++idx) {
      const double pi = p[idx];
      if (pi == 0.0) continue;
      for (const Move& m : moves[idx]) {
        dp[idx] -= m.rate * pi;
        if (m.target != kLeak) dp[m.target] += m.rate * pi;
      }
    }
  };

  auto integrate = [&](std::size_t steps) {
    std::vector<double> p = result.probabilities;
    std::vector<double> k1(S), k2(S), k3(S), k4(S), tmp(S);
    const double dt = t / static_cast<double>(steps);
    for (std::size_t step = 0; step < steps; ++step) {
      apply_generator(p, k1);
      for (std::size_t i = 0; i < S; ++i) tmp[i] = p[i] + 0.5 * dt * k1[i];
      apply_generator(tmp, k2);
      for (std::size_t i = 0; i < S; ++i) tmp[i] = p[i] + 0.5 * dt * k2[i];
      apply_generator(tmp, k3);
      for (std::size_t i = 0; i < S; ++i) tmp[i] = p[i] + dt * k3[i];
      apply_generator(tmp, k4);
      for (std::size_t i = 0; i < S; ++i)
        p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return p;
  };

  // Fixed-step RK4 with the step verified by halving until the solution moves
  // by less than 1e-8.
  std::size_t steps = static_cast<std::size_t>(std::ceil(t * q_max / 0.25));
  steps = std::max<std::size_t>(steps, 1);
  std::vector<double> p = integrate(steps);
  for (int iter = 0; iter < 20; ++iter) {
    steps *= 2;
    std::vector<double> p2 = integrate(steps);
    double diff = 0.0;
    for (std::size_t i = 0; i < S; ++i) diff = std::max(diff, std::abs(p2[i] - p[i]));
    p = std::move(p2);
    if (diff < 1e-8) break;
  }
  for (double& v : p) v = std::max(v, 0.0);

  double mass = 0.0;
  for (double v : p) mass += v;
  result.probabilities = std::move(p);
  result.leakage = std::max(0.0, 1.0 - mass);
  if (result.leakage > max_leakage)
    throw SimulationError("state cap too small: leakage " +
                          std::to_string(result.leakage) + " exceeds tolerance " +
                          std::to_string(max_leakage));
  return result;
}

}  // namespace hsim
