#ifndef HSIM_HARNESS_HPP
#define HSIM_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "exact.hpp"
#include "hybrid.hpp"

namespace hsim {

enum class EngineKind { ssa, hybrid, diffusion_only };

const char* engine_name(EngineKind kind);

struct EnsembleConfig {
  EngineKind engine = EngineKind::ssa;
  double t_final = 0.0;
  std::size_t replicates = 1;
  std::uint64_t master_seed = 0;
  unsigned parallelism = 1;
  HybridConfig hybrid;  // used by hybrid / diffusion_only
  double max_failure_fraction = 0.01;
};

/// Per-replicate failures above max_failure_fraction abort the batch with
/// this error; the failure list is preserved.
class BatchError : public SimulationError {
 public:
  BatchError(std::string message,
             std::vector<std::pair<std::size_t, std::string>> failures)
      : SimulationError(std::move(message)), failures_(std::move(failures)) {}
  const std::vector<std::pair<std::size_t, std::string>>& failures() const {
    return failures_;
  }

 private:
  std::vector<std::pair<std::size_t, std::string>> failures_;
};

struct EnsembleResult {
  EngineKind engine = EngineKind::ssa;
  double t_final = 0.0;
  std::size_t requested = 0;
  std::uint64_t master_seed = 0;
  std::vector<State> final_states;              // successes, replicate order
  std::vector<std::size_t> replicate_ids;       // matching original indices
  std::vector<std::pair<std::size_t, std::string>> failures;
  Diagnostics totals;                           // summed over replicates
  double wall_time_seconds = 0.0;
};

/// Runs `replicates` independent paths to t_final with per-replicate derived
/// substreams. The final states are a pure function of (network, config,
/// master seed) - independent of parallelism. Wall time covers the whole
/// batch. `partition` is required for hybrid; diffusion_only builds an
/// all-diffusion partition and rejects networks with discrete-changing
/// reactions.
EnsembleResult run_ensemble(const ReactionNetwork& net, const Partition* partition,
                            const State& s0, const EnsembleConfig& config);

struct Histogram {
  std::vector<double> edges;        // bin_count + 1
  std::vector<std::size_t> counts;  // sum = sample count
  std::vector<double> frequencies;  // sum = 1
};

Histogram histogram(std::span<const double> samples, std::size_t bin_count);
Histogram histogram_width(std::span<const double> samples, double bin_width);

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov: D = sup |ECDF_a - ECDF_b| (ties handled by
/// comparing after each distinct value), p from the asymptotic Kolmogorov
/// distribution with the usual finite-sample argument correction.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One-sample KS against a reference CDF.
KsResult ks_one_sample(std::span<const double> samples,
                       const std::function<double(double)>& cdf);

struct ConvergenceRow {
  double h;
  double mse;
  std::size_t n;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;  // h descending, reference row last (mse 0)
  double h_ref = 0.0;
  double slope = 0.0;  // fitted d log(mse) / d log(h), reference row excluded
  bool monotone_warning = false;
};

struct ConvergenceConfig {
  double t_final = 0.0;
  std::vector<double> h_list;  // dyadic multiples of the finest entry
  std::size_t replicates = 0;
  std::uint64_t master_seed = 0;
  double lambda_max = 1.0;
  bool drift_only = false;  // zero the Wiener increments (deterministic control)
};

/// Coupled self-convergence study: per replicate one realization of arrivals,
/// marks and Wiener paths is frozen on the finest grid and shared by every h
/// (coarse-cell increments are sums of fine-cell increments); the error of h
/// is the mean squared distance of the final state from the finest-grid run.
ConvergenceTable convergence_study(const ReactionNetwork& net,
                                   const Partition& partition, const State& s0,
                                   const ConvergenceConfig& config);

struct BenchRow {
  double h;
  double t_ssa;
  double t_hybrid;
  double ratio;  // t_ssa / t_hybrid
};

/// Wall-time ratio of the exact engine to the hybrid engine per step size,
/// identical replicate counts on both sides; the SSA batch is timed once.
std::vector<BenchRow> speedup_benchmark(const ReactionNetwork& net,
                                        const Partition& partition, const State& s0,
                                        double t_final, std::span<const double> h_list,
                                        std::size_t replicates,
                                        std::uint64_t master_seed, double lambda_max,
                                        unsigned parallelism = 1);

struct SpeciesStats {
  std::string name;
  double mean;
  double variance;  // sample variance
};

std::vector<SpeciesStats> ensemble_stats(const ReactionNetwork& net,
                                         const EnsembleResult& result);

}  // namespace hsim

#endif  // HSIM_HARNESS_HPP
