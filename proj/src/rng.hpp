#ifndef HSIM_RNG_HPP
#define HSIM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace hsim {

/// Deterministic random streams. Every variate is derived from 53-bit
/// uniforms taken off an mt19937_64, so sequences depend only on the seeding
/// material and never on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Independent substream addressed by (master seed, replicate, attempt, tag).
  static Rng substream(std::uint64_t master_seed, std::uint64_t replicate,
                       std::uint32_t attempt, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(replicate & 0xffffffffu),
                      static_cast<std::uint32_t>(replicate >> 32),
                      attempt,
                      tag};
    Rng r(0);
    r.gen_.seed(seq);
    return r;
  }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Exponential waiting time; log1p keeps u = 0 finite.
  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

  /// Standard normal, Marsaglia polar method with one cached spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stream tags for substream derivation. Changing these changes every seeded
// result, so they are part of the reproducibility contract.
namespace stream_tag {
inline constexpr std::uint32_t kSsa = 0;
inline constexpr std::uint32_t kArrivals = 1;
inline constexpr std::uint32_t kMarks = 2;
inline constexpr std::uint32_t kWienerBase = 16;  // + diffusion channel index
}  // namespace stream_tag

}  // namespace hsim

#endif  // HSIM_RNG_HPP
