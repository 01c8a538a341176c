#include "hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hsim {

namespace {

constexpr std::uint32_t kMaxRetryAttempts = 40;

void check_config(const HybridConfig& config) {
  if (!(config.h > 0)) throw std::invalid_argument("h must be positive");
  if (!(config.lambda_max > 0))
    throw std::invalid_argument("lambda_max must be positive");
  if (!(config.t_max > 0)) throw std::invalid_argument("t_max must be positive");
}

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

MarkLayout mark_layout(const ReactionNetwork& net, const Partition& partition,
                       const State& s, double lambda_max) {
  if (!(lambda_max > 0)) throw std::invalid_argument("lambda_max must be positive");
  MarkLayout layout;
  layout.lambda_max = lambda_max;
  layout.reactions = partition.jumps;
  layout.bounds.resize(partition.jumps.size() + 1);
  layout.bounds[0] = 0.0;
  for (std::size_t j = 0; j < partition.jumps.size(); ++j)
    layout.bounds[j + 1] = layout.bounds[j] + net.propensity(partition.jumps[j], s);
  if (layout.total() > lambda_max)
    throw IntensityBoundError(s, layout.total(), lambda_max);
  return layout;
}

std::optional<std::size_t> classify_mark(const MarkLayout& layout, double z) {
  for (std::size_t j = 0; j + 1 < layout.bounds.size(); ++j)
    if (z < layout.bounds[j + 1]) return layout.reactions[j];
  return std::nullopt;  // z >= total propensity: thinned
}

ReferenceJump next_reference_jump(Rng& rng, double lambda_max, double t_now) {
  if (!(lambda_max > 0)) throw std::invalid_argument("lambda_max must be positive");
  const double tau = t_now + rng.exponential(lambda_max);
  return {tau, rng.uniform(0.0, lambda_max)};
}

MergedGrid merged_grid(double t0, double t1, double h,
                       std::span<const double> jump_times) {
  if (!(t0 < t1)) throw std::invalid_argument("t0 must be below t1");
  if (!(h > 0)) throw std::invalid_argument("h must be positive");
  const double tol = 1e-12 * t1;

  MergedGrid grid;
  std::size_t j = 0;
  auto push = [&](double t, bool jump) {
    if (!grid.times.empty() && std::abs(t - grid.times.back()) <= tol) {
      grid.is_jump.back() = grid.is_jump.back() || jump;  // merged point
      return;
    }
    grid.times.push_back(t);
    grid.is_jump.push_back(jump);
  };
  for (std::size_t k = 0;; ++k) {
    double tg = t0 + static_cast<double>(k) * h;
    if (tg > t1 - tol) tg = t1;
    while (j < jump_times.size() && jump_times[j] < tg - tol)
      push(jump_times[j++], true);
    const bool merge_jump =
        j < jump_times.size() && std::abs(jump_times[j] - tg) <= tol;
    if (merge_jump) ++j;
    push(tg, merge_jump);
    if (tg >= t1 - tol) break;
  }
  while (j < jump_times.size()) push(jump_times[j++], true);
  return grid;
}

namespace {

// Shared Euler-Maruyama kernel. `dw` is only consulted for channels with
// positive propensity, so zero-rate channels cost no draws.
template <typename DwFn>
void advance_diffusion(const ReactionNetwork& net, const Partition& partition,
                       State& s, double dt, DwFn&& dw, Diagnostics* diagnostics) {
  const std::size_t C = partition.diffusion.size();
  if (C == 0 || dt <= 0.0) return;
  // propensities at the pre-step state
  double a_local[8];
  std::vector<double> a_heap;
  double* a = a_local;
  if (C > 8) {
    a_heap.resize(C);
    a = a_heap.data();
  }
  for (std::size_t c = 0; c < C; ++c) a[c] = net.propensity(partition.diffusion[c], s);
  for (std::size_t c = 0; c < C; ++c) {
    if (a[c] <= 0.0) continue;  // drift and noise coefficient both vanish
    const double move = a[c] * dt + std::sqrt(a[c]) * dw(c);
    for (const auto& d : net.deltas(partition.diffusion[c]))
      s.x[d.slot] += static_cast<double>(d.delta) * move;
  }
  for (double& xv : s.x) {
    if (xv < 0.0) {
      xv = 0.0;
      if (diagnostics) ++diagnostics->clamps;
    }
  }
}

}  // namespace

State diffusion_step(const ReactionNetwork& net, const Partition& partition,
                     const State& s, double dt, std::span<const double> dW,
                     Diagnostics* diagnostics) {
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  if (dW.size() != partition.diffusion.size())
    throw std::invalid_argument("one Wiener increment per diffusion channel required");
  State out = s;
  advance_diffusion(net, partition, out, dt, [&](std::size_t c) { return dW[c]; },
                    diagnostics);
  out.t = s.t + dt;
  return out;
}

std::pair<State, std::optional<std::size_t>> jump_step(const ReactionNetwork& net,
                                                       const Partition& /*partition*/,
                                                       const State& s_minus, double z,
                                                       const MarkLayout& layout) {
  State out = s_minus;
  const auto fired = classify_mark(layout, z);
  if (fired) {
    net.apply_stoichiometry(out, *fired);
    for (double& xv : out.x) xv = std::max(xv, 0.0);
  }
  return {out, fired};
}

RngNoiseSource::RngNoiseSource(std::uint64_t master_seed, std::uint64_t replicate,
                               std::uint32_t attempt, std::size_t channels,
                               double lambda_max)
    : arrivals_(Rng::substream(master_seed, replicate, attempt, stream_tag::kArrivals)),
      marks_(Rng::substream(master_seed, replicate, attempt, stream_tag::kMarks)),
      lambda_max_(lambda_max) {
  wiener_.reserve(channels);
  for (std::size_t c = 0; c < channels; ++c)
    wiener_.push_back(Rng::substream(master_seed, replicate, attempt,
                                     stream_tag::kWienerBase + static_cast<std::uint32_t>(c)));
}

ReferenceJump RngNoiseSource::next_arrival() {
  tau_ += arrivals_.exponential(lambda_max_);
  return {tau_, marks_.uniform(0.0, lambda_max_)};
}

double RngNoiseSource::wiener_increment(std::size_t channel, double t0, double t1) {
  return wiener_[channel].normal(0.0, std::sqrt(t1 - t0));
}

NoiseRealization make_noise_realization(std::uint64_t master_seed,
                                        std::uint64_t replicate,
                                        std::size_t channels, double lambda_max,
                                        double t_max, double h_ref) {
  if (!(lambda_max > 0)) throw std::invalid_argument("lambda_max must be positive");
  if (!(t_max > 0)) throw std::invalid_argument("t_max must be positive");
  if (!(h_ref > 0)) throw std::invalid_argument("h_ref must be positive");

  NoiseRealization nr;
  nr.t_max = t_max;
  Rng arrivals = Rng::substream(master_seed, replicate, 0, stream_tag::kArrivals);
  Rng marks = Rng::substream(master_seed, replicate, 0, stream_tag::kMarks);
  double tau = 0.0;
  std::vector<double> jump_times;
  while (true) {
    tau += arrivals.exponential(lambda_max);
    if (tau > t_max) break;
    nr.arrivals.push_back({tau, marks.uniform(0.0, lambda_max)});
    jump_times.push_back(tau);
  }
  const MergedGrid grid = merged_grid(0.0, t_max, h_ref, jump_times);
  nr.fine_times = grid.times;

  nr.wiener.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    Rng w = Rng::substream(master_seed, replicate, 0,
                           stream_tag::kWienerBase + static_cast<std::uint32_t>(c));
    auto& path = nr.wiener[c];
    path.resize(nr.fine_times.size());
    path[0] = 0.0;
    for (std::size_t i = 1; i < nr.fine_times.size(); ++i) {
      const double dt = nr.fine_times[i] - nr.fine_times[i - 1];
      path[i] = path[i - 1] + w.normal(0.0, std::sqrt(dt));
    }
  }
  return nr;
}

std::size_t CoupledNoiseSource::time_index(double t) const {
  const auto& times = realization_->fine_times;
  const double tol = 1e-9 * std::max(realization_->t_max, 1.0);
  auto it = std::lower_bound(times.begin(), times.end(), t - tol);
  if (it == times.end() || std::abs(*it - t) > tol)
    throw std::invalid_argument(
        "coupled noise queried off the fine grid (t=" + std::to_string(t) + ")");
  return static_cast<std::size_t>(it - times.begin());
}

ReferenceJump CoupledNoiseSource::next_arrival() {
  if (next_ < realization_->arrivals.size()) return realization_->arrivals[next_++];
  return {std::numeric_limits<double>::infinity(), 0.0};
}

double CoupledNoiseSource::wiener_increment(std::size_t channel, double t0, double t1) {
  if (drift_only_) return 0.0;
  const auto& path = realization_->wiener[channel];
  return path[time_index(t1)] - path[time_index(t0)];
}

Trajectory hybrid_simulate_with_noise(const ReactionNetwork& net,
                                      const Partition& partition, const State& s0,
                                      double h, double t_max, double lambda_max,
                                      std::span<const double> sample_grid,
                                      NoiseSource& noise, bool record_events) {
  if (!(h > 0) || !(t_max > 0) || !(lambda_max > 0))
    throw std::invalid_argument("h, t_max and lambda_max must be positive");
  check_sample_grid(sample_grid, t_max);

  const std::size_t R = net.reactions().size();
  const double tol = 1e-12 * t_max;
  const bool has_jumps = !partition.jumps.empty();

  Trajectory traj;
  traj.events_recorded = record_events;
  traj.diagnostics.events_per_reaction.assign(R, 0);
  traj.diagnostics.lambda_max_used = lambda_max;

  State s = s0;
  s.t = 0.0;
  traj.times.push_back(0.0);
  traj.states.push_back(s);
  std::size_t gi = 0;
  while (gi < sample_grid.size() && sample_grid[gi] <= 0.0) ++gi;

  auto record_through = [&](double upto, bool inclusive) {
    while (gi < sample_grid.size() &&
           (inclusive ? sample_grid[gi] <= upto + tol : sample_grid[gi] < upto - tol)) {
      State snap = s;
      snap.t = sample_grid[gi];
      traj.times.push_back(sample_grid[gi]);
      traj.states.push_back(std::move(snap));
      ++gi;
    }
  };

  // scratch mark layout, reused across arrivals
  std::vector<double> bounds(partition.jumps.size() + 1, 0.0);

  ReferenceJump arrival{std::numeric_limits<double>::infinity(), 0.0};
  if (has_jumps) arrival = noise.next_arrival();

  double t = 0.0;
  std::size_t k = 1;
  while (true) {
    const double tg = std::min(static_cast<double>(k) * h, t_max);
    double tn;
    bool is_jump = false;
    bool is_grid = false;
    if (arrival.tau <= t_max && arrival.tau < tg - tol) {
      tn = arrival.tau;
      is_jump = true;
    } else if (arrival.tau <= t_max && arrival.tau <= tg + tol) {
      tn = tg;  // arrival merges with the grid point; keep the jump role
      is_jump = true;
      is_grid = true;
    } else {
      tn = tg;
      is_grid = true;
    }

    record_through(tn, false);  // samples strictly inside the cell hold the state

    const double dt = tn - t;
    if (dt > 0.0)
      advance_diffusion(net, partition, s, dt,
                        [&](std::size_t c) { return noise.wiener_increment(c, t, tn); },
                        &traj.diagnostics);
    t = tn;
    s.t = t;

    if (is_jump) {
      // layout at (post-diffusion X, sigma from the previous step)
      bounds[0] = 0.0;
      for (std::size_t j = 0; j < partition.jumps.size(); ++j)
        bounds[j + 1] = bounds[j] + net.propensity(partition.jumps[j], s);
      if (bounds.back() > lambda_max)
        throw IntensityBoundError(s, bounds.back(), lambda_max);
      std::size_t fired = partition.jumps.size();
      for (std::size_t j = 0; j < partition.jumps.size(); ++j) {
        if (arrival.z < bounds[j + 1]) {
          fired = j;
          break;
        }
      }
      if (fired < partition.jumps.size()) {
        const std::size_t r = partition.jumps[fired];
        net.apply_stoichiometry(s, r);
        for (double& xv : s.x) {
          if (xv < 0.0) {
            xv = 0.0;
            ++traj.diagnostics.clamps;
          }
        }
        ++traj.diagnostics.events_per_reaction[r];
        if (record_events) traj.events.push_back({t, r});
      } else {
        ++traj.diagnostics.thinned;
      }
      arrival = noise.next_arrival();
    }

    record_through(tn, true);  // samples at the stepping point see S_t (cadlag)
    if (is_grid) ++k;
    if (t >= t_max - tol) break;
  }
  record_through(t_max, true);
  return traj;
}

Trajectory hybrid_simulate(const ReactionNetwork& net, const Partition& partition,
                           const State& s0, const HybridConfig& config,
                           std::span<const double> sample_grid,
                           std::uint64_t master_seed, std::uint64_t replicate,
                           bool record_events) {
  check_config(config);
  double lambda = config.lambda_max;
  for (std::uint32_t attempt = 0;; ++attempt) {
    RngNoiseSource noise(master_seed, replicate, attempt, partition.diffusion.size(),
                         lambda);
    try {
      Trajectory traj =
          hybrid_simulate_with_noise(net, partition, s0, config.h, config.t_max,
                                     lambda, sample_grid, noise, record_events);
      traj.diagnostics.retries = attempt;
      traj.diagnostics.lambda_max_used = lambda;
      return traj;
    } catch (const IntensityBoundError&) {
      if (config.lambda_policy == LambdaPolicy::fail ||
          attempt + 1 >= kMaxRetryAttempts)
        throw;
      lambda *= 2.0;  // retry the whole replicate with fresh substreams
    }
  }
}

}  // namespace hsim
