#ifndef HSIM_HYBRID_HPP
#define HSIM_HYBRID_HPP

#include <memory>
#include <optional>
#include <span>

#include "netmodel.hpp"
#include "rng.hpp"
#include "trajectory.hpp"

namespace hsim {

/// Cumulative propensity bounds of the jump reactions in partition order,
/// evaluated at one state: bounds[0] = 0, bounds[j+1] - bounds[j] = a_{r_j}.
/// The mark interval of reaction r_j is [bounds[j], bounds[j+1]).
struct MarkLayout {
  std::vector<double> bounds;
  std::vector<std::size_t> reactions;  // global reaction indices, jump order
  double lambda_max = 0.0;

  double total() const { return bounds.empty() ? 0.0 : bounds.back(); }
};

/// Arrival of the reference Poisson process: time tau and mark z, with z
/// uniform on [0, lambda_max).
struct ReferenceJump {
  double tau;
  double z;
};

enum class LambdaPolicy { fail, retry_doubled };
enum class ClampPolicy { clamp_zero };

struct HybridConfig {
  double h = 0.1;           // diffusion grid step
  double lambda_max = 0.0;  // reference process intensity (required)
  double t_max = 0.0;       // horizon
  LambdaPolicy lambda_policy = LambdaPolicy::fail;
  ClampPolicy clamp_policy = ClampPolicy::clamp_zero;
};

/// Total jump propensity rose above the reference intensity. Carries the
/// offending state and the two intensities.
class IntensityBoundError : public SimulationError {
 public:
  IntensityBoundError(State state, double total, double lambda_max)
      : SimulationError("intensity bound exceeded: total jump propensity " +
                        std::to_string(total) + " > lambda_max " +
                        std::to_string(lambda_max) + " at t=" +
                        std::to_string(state.t)),
        state_(std::move(state)),
        total_(total),
        lambda_max_(lambda_max) {}
  const State& state() const { return state_; }
  double total() const { return total_; }
  double lambda_max() const { return lambda_max_; }

 private:
  State state_;
  double total_;
  double lambda_max_;
};

/// Builds the mark layout at a state; throws IntensityBoundError if the total
/// jump propensity exceeds lambda_max.
MarkLayout mark_layout(const ReactionNetwork& net, const Partition& partition,
                       const State& s, double lambda_max);

/// Maps a mark to the jump reaction whose interval contains it, or nullopt
/// when the mark lands past the total propensity (thinned, no state change).
std::optional<std::size_t> classify_mark(const MarkLayout& layout, double z);

/// Next reference-process arrival after t_now: tau = t_now + Exp(lambda_max),
/// z ~ Uniform[0, lambda_max).
ReferenceJump next_reference_jump(Rng& rng, double lambda_max, double t_now);

/// Union of the equidistant grid {t0, t0+h, ..., t1} with the given jump
/// times, sorted; points closer than 1e-12*t1 merge, and a merged point keeps
/// its jump role.
struct MergedGrid {
  std::vector<double> times;
  std::vector<bool> is_jump;
};
MergedGrid merged_grid(double t0, double t1, double h,
                       std::span<const double> jump_times);

/// Euler-Maruyama update of the continuous components over dt with
/// caller-supplied Wiener increments (one per diffusion channel, in partition
/// order). Propensities are evaluated at the pre-step state; sigma is
/// untouched; x is clamped at zero afterwards, counting clamps.
State diffusion_step(const ReactionNetwork& net, const Partition& partition,
                     const State& s, double dt, std::span<const double> dW,
                     Diagnostics* diagnostics = nullptr);

/// Applies the jump selected by the mark (layout must have been computed at
/// s_minus). Returns the new state and the fired reaction, or nullopt when
/// thinned.
std::pair<State, std::optional<std::size_t>> jump_step(const ReactionNetwork& net,
                                                       const Partition& partition,
                                                       const State& s_minus, double z,
                                                       const MarkLayout& layout);

/// Noise needed by one hybrid path: reference-process arrivals (with marks)
/// and per-channel Wiener increments. Implementations must return strictly
/// increasing arrival times and independent N(0, t1-t0) increments.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  virtual ReferenceJump next_arrival() = 0;
  virtual double wiener_increment(std::size_t channel, double t0, double t1) = 0;
};

/// Production noise: one substream per Wiener channel, one for arrivals, one
/// for marks, all derived from (master seed, replicate, attempt).
class RngNoiseSource final : public NoiseSource {
 public:
  RngNoiseSource(std::uint64_t master_seed, std::uint64_t replicate,
                 std::uint32_t attempt, std::size_t channels, double lambda_max);
  ReferenceJump next_arrival() override;
  double wiener_increment(std::size_t channel, double t0, double t1) override;

 private:
  Rng arrivals_;
  Rng marks_;
  std::vector<Rng> wiener_;
  double lambda_max_;
  double tau_ = 0.0;
};

/// One frozen realization of the driving noise on a fine grid, for coupled
/// h-refinement studies: arrivals are pre-drawn, and Wiener paths are tabled
/// at the merged fine grid so coarse-cell increments are exactly sums of
/// fine-cell increments.
struct NoiseRealization {
  double t_max = 0.0;
  std::vector<ReferenceJump> arrivals;     // all arrivals with tau <= t_max
  std::vector<double> fine_times;          // merged fine grid, starts at 0
  std::vector<std::vector<double>> wiener; // per channel, W at fine_times
};

NoiseRealization make_noise_realization(std::uint64_t master_seed,
                                        std::uint64_t replicate,
                                        std::size_t channels, double lambda_max,
                                        double t_max, double h_ref);

class CoupledNoiseSource final : public NoiseSource {
 public:
  explicit CoupledNoiseSource(const NoiseRealization& realization,
                              bool drift_only = false)
      : realization_(&realization), drift_only_(drift_only) {}
  ReferenceJump next_arrival() override;
  double wiener_increment(std::size_t channel, double t0, double t1) override;

 private:
  std::size_t time_index(double t) const;
  const NoiseRealization* realization_;
  bool drift_only_;
  std::size_t next_ = 0;
};

/// Jump-diffusion propagation on the merged grid: Euler-Maruyama between
/// stepping points, thinning of the reference process at its arrivals
/// (diffusion advances to the arrival first; the mark is then classified at
/// the post-diffusion state with the pre-step sigma). Samples follow the same
/// cadlag convention as ssa_simulate, holding the last stepping-point value.
///
/// Substreams are derived from (master_seed, replicate, attempt). Under
/// LambdaPolicy::retry_doubled an intensity-bound violation restarts the
/// replicate from t=0 with doubled lambda_max and fresh substreams;
/// diagnostics report the retries and the lambda_max actually used.
Trajectory hybrid_simulate(const ReactionNetwork& net, const Partition& partition,
                           const State& s0, const HybridConfig& config,
                           std::span<const double> sample_grid,
                           std::uint64_t master_seed, std::uint64_t replicate,
                           bool record_events = false);

/// Single attempt driven by an external noise source (no retry policy).
Trajectory hybrid_simulate_with_noise(const ReactionNetwork& net,
                                      const Partition& partition, const State& s0,
                                      double h, double t_max, double lambda_max,
                                      std::span<const double> sample_grid,
                                      NoiseSource& noise,
                                      bool record_events = false);

}  // namespace hsim

#endif  // HSIM_HYBRID_HPP
