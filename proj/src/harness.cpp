#include "harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <thread>

namespace hsim {

const char* engine_name(EngineKind kind) {
  switch (kind) {
    case EngineKind::ssa: return "ssa";
    case EngineKind::hybrid: return "hybrid";
    case EngineKind::diffusion_only: return "diffusion_only";
  }
  return "unknown";
}

namespace {

Partition all_diffusion_partition(const ReactionNetwork& net) {
  Partition part;
  for (std::size_t r = 0; r < net.reactions().size(); ++r) {
    if (net.touches_discrete(r))
      throw std::invalid_argument(
          "diffusion_only engine requires a network without discrete-changing "
          "reactions (reaction " + net.reactions()[r].id + ")");
    part.diffusion.push_back(r);
  }
  return part;
}

}  // namespace

EnsembleResult run_ensemble(const ReactionNetwork& net, const Partition* partition,
                            const State& s0, const EnsembleConfig& config) {
  if (config.replicates < 1)
    throw std::invalid_argument("replicates must be at least 1");
  if (!(config.t_final > 0)) throw std::invalid_argument("t_final must be positive");

  Partition local;
  const Partition* part = partition;
  if (config.engine == EngineKind::hybrid) {
    if (!part) throw std::invalid_argument("hybrid engine requires a partition");
  } else if (config.engine == EngineKind::diffusion_only) {
    local = all_diffusion_partition(net);
    part = &local;
  }

  HybridConfig hconf = config.hybrid;
  hconf.t_max = config.t_final;

  const std::size_t n = config.replicates;
  const double grid[1] = {config.t_final};

  struct Slot {
    std::optional<State> state;
    Diagnostics diagnostics;
    std::string error;
  };
  std::vector<Slot> slots(n);

  auto run_one = [&](std::size_t rep) {
    Slot& slot = slots[rep];
    try {
      Trajectory traj;
      if (config.engine == EngineKind::ssa) {
        Rng rng = Rng::substream(config.master_seed, rep, 0, stream_tag::kSsa);
        traj = ssa_simulate(net, s0, config.t_final, grid, rng);
      } else {
        traj = hybrid_simulate(net, *part, s0, hconf, grid, config.master_seed, rep);
      }
      slot.state = traj.states.back();
      slot.diagnostics = std::move(traj.diagnostics);
    } catch (const std::exception& e) {
      slot.error = e.what();
      if (slot.error.empty()) slot.error = "unknown error";
    }
  };

  const auto t_begin = std::chrono::steady_clock::now();
  const unsigned workers =
      std::max(1u, std::min<unsigned>(config.parallelism, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t rep = 0; rep < n; ++rep) run_one(rep);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t lo = n * w / workers;
      const std::size_t hi = n * (w + 1) / workers;
      auto chunk = [&run_one, lo, hi] {
        for (std::size_t rep = lo; rep < hi; ++rep) run_one(rep);
      };
      if (w + 1 == workers)
        chunk();  // run the last chunk on this thread
      else
        pool.emplace_back(chunk);
    }
    for (auto& th : pool) th.join();
  }
  const auto t_end = std::chrono::steady_clock::now();

  EnsembleResult result;
  result.engine = config.engine;
  result.t_final = config.t_final;
  result.requested = n;
  result.master_seed = config.master_seed;
  result.wall_time_seconds = std::chrono::duration<double>(t_end - t_begin).count();
  for (std::size_t rep = 0; rep < n; ++rep) {
    Slot& slot = slots[rep];
    if (slot.state) {
      result.final_states.push_back(std::move(*slot.state));
      result.replicate_ids.push_back(rep);
      result.totals.merge(slot.diagnostics);
    } else {
      result.failures.emplace_back(rep, std::move(slot.error));
    }
  }
  const double failure_fraction =
      static_cast<double>(result.failures.size()) / static_cast<double>(n);
  if (failure_fraction > config.max_failure_fraction) {
    std::string msg = "ensemble batch failed: " +
                      std::to_string(result.failures.size()) + " of " +
                      std::to_string(n) + " replicates failed (first: " +
                      result.failures.front().second + ")";
    throw BatchError(std::move(msg), std::move(result.failures));
  }
  return result;
}

Histogram histogram(std::span<const double> samples, std::size_t bin_count) {
  if (samples.empty()) throw std::invalid_argument("histogram of an empty sample set");
  if (bin_count == 0) throw std::invalid_argument("bin count must be positive");
  const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
  double lo = *mn_it, hi = *mx_it;
  if (lo == hi) hi = lo + 1.0;  // degenerate range: everything in the first bin
  Histogram out;
  out.edges.resize(bin_count + 1);
  for (std::size_t i = 0; i <= bin_count; ++i)
    out.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bin_count);
  out.counts.assign(bin_count, 0);
  const double width = (hi - lo) / static_cast<double>(bin_count);
  for (double v : samples) {
    auto bin = static_cast<std::size_t>(std::clamp(
        std::floor((v - lo) / width), 0.0, static_cast<double>(bin_count - 1)));
    ++out.counts[bin];
  }
  out.frequencies.resize(bin_count);
  for (std::size_t i = 0; i < bin_count; ++i)
    out.frequencies[i] =
        static_cast<double>(out.counts[i]) / static_cast<double>(samples.size());
  return out;
}

Histogram histogram_width(std::span<const double> samples, double bin_width) {
  if (samples.empty()) throw std::invalid_argument("histogram of an empty sample set");
  if (!(bin_width > 0)) throw std::invalid_argument("bin width must be positive");
  const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *mn_it, hi = *mx_it;
  const std::size_t bins =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / bin_width)));
  Histogram out;
  out.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    out.edges[i] = lo + bin_width * static_cast<double>(i);
  out.counts.assign(bins, 0);
  for (double v : samples) {
    auto bin = static_cast<std::size_t>(
        std::clamp(std::floor((v - lo) / bin_width), 0.0, static_cast<double>(bins - 1)));
    ++out.counts[bin];
  }
  out.frequencies.resize(bins);
  for (std::size_t i = 0; i < bins; ++i)
    out.frequencies[i] =
        static_cast<double>(out.counts[i]) / static_cast<double>(samples.size());
  return out;
}

namespace {

// Survival function of the Kolmogorov distribution, Q(lambda) =
// 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 101; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-14) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_p_value(double d, double n_effective) {
  const double sq = std::sqrt(n_effective);
  return kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample requires two nonempty samples");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() || j < sb.size()) {
    // advance over one distinct value in both samples, then compare ECDFs
    double v;
    if (i < sa.size() && (j >= sb.size() || sa[i] <= sb[j]))
      v = sa[i];
    else
      v = sb[j];
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  return {d, ks_p_value(d, ne)};
}

KsResult ks_one_sample(std::span<const double> samples,
                       const std::function<double(double)>& cdf) {
  if (samples.empty())
    throw std::invalid_argument("ks_one_sample requires a nonempty sample");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max(d, std::max(f - static_cast<double>(i) / n,
                             static_cast<double>(i + 1) / n - f));
  }
  return {d, ks_p_value(d, n)};
}

namespace {

double state_sq_distance(const State& a, const State& b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    const double d = a.x[i] - b.x[i];
    sq += d * d;
  }
  for (std::size_t i = 0; i < a.sigma.size(); ++i) {
    const double d = static_cast<double>(a.sigma[i] - b.sigma[i]);
    sq += d * d;
  }
  return sq;
}

}  // namespace

ConvergenceTable convergence_study(const ReactionNetwork& net,
                                   const Partition& partition, const State& s0,
                                   const ConvergenceConfig& config) {
  if (config.h_list.size() < 3)
    throw std::invalid_argument("h_list needs at least 3 entries");
  if (config.replicates < 1)
    throw std::invalid_argument("replicates must be at least 1");
  if (!(config.t_final > 0)) throw std::invalid_argument("t_final must be positive");

  std::vector<double> hs = config.h_list;
  std::sort(hs.begin(), hs.end(), std::greater<>());
  const double h_ref_in = hs.back();
  if (!(h_ref_in > 0)) throw std::invalid_argument("h values must be positive");

  // Every h must be a power-of-two multiple of the finest one; snap to the
  // exact dyadic value so grid points coincide bit-for-bit.
  for (double& h : hs) {
    const double ratio = h / h_ref_in;
    const double k = std::round(std::log2(ratio));
    const double snapped = std::ldexp(h_ref_in, static_cast<int>(k));
    if (k < 0 || std::abs(snapped - h) > 1e-9 * h)
      throw std::invalid_argument(
          "h_list entries must be dyadic multiples of the finest entry");
    h = snapped;
  }
  ConvergenceTable table;
  table.h_ref = hs.back();
  const double span = hs.front() / hs.back();
  (void)span;  // spanning less than a decade is tolerated (warning-level)

  std::vector<double> sums(hs.size(), 0.0);
  const double grid[1] = {config.t_final};
  for (std::size_t rep = 0; rep < config.replicates; ++rep) {
    const NoiseRealization realization = make_noise_realization(
        config.master_seed, rep, partition.diffusion.size(), config.lambda_max,
        config.t_final, table.h_ref);
    CoupledNoiseSource ref_noise(realization, config.drift_only);
    const Trajectory ref =
        hybrid_simulate_with_noise(net, partition, s0, table.h_ref, config.t_final,
                                   config.lambda_max, grid, ref_noise);
    const State& ref_state = ref.states.back();
    for (std::size_t hi = 0; hi < hs.size(); ++hi) {
      if (hs[hi] == table.h_ref) {
        continue;  // identically coupled: error 0 by construction
      }
      CoupledNoiseSource noise(realization, config.drift_only);
      const Trajectory run =
          hybrid_simulate_with_noise(net, partition, s0, hs[hi], config.t_final,
                                     config.lambda_max, grid, noise);
      sums[hi] += state_sq_distance(run.states.back(), ref_state);
    }
  }

  for (std::size_t hi = 0; hi < hs.size(); ++hi)
    table.rows.push_back(
        {hs[hi], sums[hi] / static_cast<double>(config.replicates), config.replicates});

  // least-squares slope of log(mse) vs log(h), reference row excluded
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (const ConvergenceRow& row : table.rows) {
    if (row.h == table.h_ref || row.mse <= 0.0) continue;
    const double lx = std::log(row.h), ly = std::log(row.mse);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  table.slope = m >= 2 ? (static_cast<double>(m) * sxy - sx * sy) /
                             (static_cast<double>(m) * sxx - sx * sx)
                       : std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i + 1 < table.rows.size(); ++i)
    if (table.rows[i].mse < table.rows[i + 1].mse && table.rows[i + 1].h != table.h_ref)
      table.monotone_warning = true;
  return table;
}

std::vector<BenchRow> speedup_benchmark(const ReactionNetwork& net,
                                        const Partition& partition, const State& s0,
                                        double t_final, std::span<const double> h_list,
                                        std::size_t replicates,
                                        std::uint64_t master_seed, double lambda_max,
                                        unsigned parallelism) {
  if (replicates < 1) throw std::invalid_argument("replicates must be at least 1");
  if (h_list.empty()) throw std::invalid_argument("h_list must be nonempty");

  EnsembleConfig ssa_cfg;
  ssa_cfg.engine = EngineKind::ssa;
  ssa_cfg.t_final = t_final;
  ssa_cfg.replicates = replicates;
  ssa_cfg.master_seed = master_seed;
  ssa_cfg.parallelism = parallelism;
  const double t_ssa = run_ensemble(net, nullptr, s0, ssa_cfg).wall_time_seconds;

  std::vector<BenchRow> rows;
  for (double h : h_list) {
    EnsembleConfig cfg;
    cfg.engine = EngineKind::hybrid;
    cfg.t_final = t_final;
    cfg.replicates = replicates;
    cfg.master_seed = master_seed;
    cfg.parallelism = parallelism;
    cfg.hybrid.h = h;
    cfg.hybrid.lambda_max = lambda_max;
    cfg.hybrid.t_max = t_final;
    const double t_h = run_ensemble(net, &partition, s0, cfg).wall_time_seconds;
    rows.push_back({h, t_ssa, t_h, t_ssa / t_h});
  }
  return rows;
}

std::vector<SpeciesStats> ensemble_stats(const ReactionNetwork& net,
                                         const EnsembleResult& result) {
  const std::size_t N = net.species().size();
  const std::size_t n = result.final_states.size();
  std::vector<SpeciesStats> stats;
  stats.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    double mean = 0.0;
    for (const State& s : result.final_states) mean += net.value(s, i);
    if (n > 0) mean /= static_cast<double>(n);
    double var = 0.0;
    for (const State& s : result.final_states) {
      const double d = net.value(s, i) - mean;
      var += d * d;
    }
    var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
    stats.push_back({net.species()[i].name, mean, var});
  }
  return stats;
}

}  // namespace hsim
