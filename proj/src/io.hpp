#ifndef HSIM_IO_HPP
#define HSIM_IO_HPP

#include <ostream>
#include <string>

#include "harness.hpp"

namespace hsim {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// %.10g, the numeric format shared by every CSV writer.
std::string format_g10(double v);

// Writers mirror the documented file formats exactly; see the README.
void write_trajectory_csv(std::ostream& out, const ReactionNetwork& net,
                          const Trajectory& traj);
void write_ensemble_csv(std::ostream& out, const ReactionNetwork& net,
                        const EnsembleResult& result);
void write_histogram_csv(std::ostream& out, const Histogram& hist);
void write_convergence_csv(std::ostream& out, const ConvergenceTable& table);
void write_benchmark_csv(std::ostream& out, std::span<const BenchRow> rows);

std::string stats_json(const ReactionNetwork& net, const EnsembleResult& result);
std::string diagnostics_json(const ReactionNetwork& net, const Diagnostics& diagnostics,
                             double wall_time_seconds);
std::string validity_report_json(const ReactionNetwork& net,
                                 std::span<const ValidityRow> rows, double h_min);

/// Writes a string to a file, throwing IoError on failure.
void write_file(const std::string& path, const std::string& contents);

}  // namespace hsim

#endif  // HSIM_IO_HPP
