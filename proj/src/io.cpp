#include "io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hsim {

using nlohmann::json;

std::string format_g10(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const ReactionNetwork& net,
                          const Trajectory& traj) {
  out << "t";
  for (const Species& sp : net.species()) out << "," << sp.name;
  out << "\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out << format_g10(traj.times[i]);
    for (std::size_t sp = 0; sp < net.species().size(); ++sp)
      out << "," << format_g10(net.value(traj.states[i], sp));
    out << "\n";
  }
}

void write_ensemble_csv(std::ostream& out, const ReactionNetwork& net,
                        const EnsembleResult& result) {
  out << "replicate";
  for (const Species& sp : net.species()) out << "," << sp.name;
  out << "\n";
  for (std::size_t i = 0; i < result.final_states.size(); ++i) {
    out << result.replicate_ids[i];
    for (std::size_t sp = 0; sp < net.species().size(); ++sp)
      out << "," << format_g10(net.value(result.final_states[i], sp));
    out << "\n";
  }
}

void write_histogram_csv(std::ostream& out, const Histogram& hist) {
  out << "bin_lo,bin_hi,count,frequency\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    out << format_g10(hist.edges[i]) << "," << format_g10(hist.edges[i + 1]) << ","
        << hist.counts[i] << "," << format_g10(hist.frequencies[i]) << "\n";
}

void write_convergence_csv(std::ostream& out, const ConvergenceTable& table) {
  out << "h,mse,n\n";
  for (const ConvergenceRow& row : table.rows)
    out << format_g10(row.h) << "," << format_g10(row.mse) << "," << row.n << "\n";
}

void write_benchmark_csv(std::ostream& out, std::span<const BenchRow> rows) {
  out << "h,t_ssa,t_hybrid,ratio\n";
  for (const BenchRow& row : rows)
    out << format_g10(row.h) << "," << format_g10(row.t_ssa) << ","
        << format_g10(row.t_hybrid) << "," << format_g10(row.ratio) << "\n";
}

std::string stats_json(const ReactionNetwork& net, const EnsembleResult& result) {
  json species = json::object();
  for (const SpeciesStats& st : ensemble_stats(net, result))
    species[st.name] = {{"mean", st.mean}, {"variance", st.variance}};
  json j{{"engine", engine_name(result.engine)},
         {"T", result.t_final},
         {"replicates", result.final_states.size()},
         {"requested", result.requested},
         {"failures", result.failures.size()},
         {"seed", result.master_seed},
         {"species", species},
         {"wall_time_seconds", result.wall_time_seconds}};
  return j.dump(2);
}

std::string diagnostics_json(const ReactionNetwork& net, const Diagnostics& diagnostics,
                             double wall_time_seconds) {
  json events = json::object();
  for (std::size_t r = 0; r < diagnostics.events_per_reaction.size(); ++r)
    events[net.reactions()[r].id] = diagnostics.events_per_reaction[r];
  json j{{"events_per_reaction", events},
         {"thinned", diagnostics.thinned},
         {"clamps", diagnostics.clamps},
         {"retries", diagnostics.retries},
         {"lambda_max_used", diagnostics.lambda_max_used},
         {"wall_time_seconds", wall_time_seconds}};
  return j.dump(2);
}

std::string validity_report_json(const ReactionNetwork& net,
                                 std::span<const ValidityRow> rows, double h_min) {
  json arr = json::array();
  for (const ValidityRow& row : rows)
    arr.push_back({{"reaction", net.reactions()[row.reaction].id},
                   {"h", row.h_value},
                   {"pass", row.pass}});
  json j{{"h_min", h_min}, {"diffusion_reactions", arr}};
  return j.dump(2);
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << contents;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace hsim
