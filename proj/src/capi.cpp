#include "hybridsim/hybridsim.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "harness.hpp"
#include "io.hpp"

using namespace hsim;

struct hsim_network {
  ReactionNetwork net;
};
struct hsim_partition {
  Partition part;
};
struct hsim_trajectory {
  ReactionNetwork net;
  Trajectory traj;
  double wall_time_seconds;
};
struct hsim_ensemble {
  ReactionNetwork net;
  EnsembleResult result;
};
struct hsim_convergence {
  ConvergenceTable table;
};
struct hsim_benchmark {
  std::vector<BenchRow> rows;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
hsim_status guarded(Fn&& fn) {
  try {
    fn();
    return HSIM_OK;
  } catch (const ParseError& e) {
    g_last_error = e.what();
    return HSIM_ERROR_PARSE;
  } catch (const IoError& e) {
    g_last_error = e.what();
    return HSIM_ERROR_IO;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return HSIM_ERROR_INVALID_ARGUMENT;
  } catch (const SimulationError& e) {
    g_last_error = e.what();
    return HSIM_ERROR_SIMULATION;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HSIM_ERROR_SIMULATION;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

std::vector<double> sample_grid_from(const hsim_run_options& opt) {
  std::vector<double> grid;
  grid.push_back(0.0);
  if (opt.sample_dt > 0) {
    for (std::size_t i = 1;; ++i) {
      const double t = static_cast<double>(i) * opt.sample_dt;
      if (t >= opt.t_final * (1.0 - 1e-12)) break;
      grid.push_back(t);
    }
  }
  grid.push_back(opt.t_final);
  return grid;
}

HybridConfig hybrid_config_from(const hsim_run_options& opt) {
  HybridConfig conf;
  conf.h = opt.h;
  conf.lambda_max = opt.lambda_max;
  conf.t_max = opt.t_final;
  conf.lambda_policy =
      opt.lambda_policy == 0 ? LambdaPolicy::fail : LambdaPolicy::retry_doubled;
  return conf;
}

EnsembleConfig ensemble_config_from(const hsim_run_options& opt, EngineKind engine) {
  EnsembleConfig conf;
  conf.engine = engine;
  conf.t_final = opt.t_final;
  conf.replicates = static_cast<std::size_t>(opt.replicates);
  conf.master_seed = opt.seed;
  conf.parallelism = opt.parallelism == 0 ? 1 : opt.parallelism;
  conf.hybrid = hybrid_config_from(opt);
  return conf;
}

}  // namespace

extern "C" {

const char* hsim_last_error(void) { return g_last_error.c_str(); }

void hsim_string_free(char* s) { std::free(s); }

hsim_status hsim_network_parse(const char* text, hsim_network** out) {
  return guarded([&] {
    require(text && out, "text and out must be non-null");
    auto handle = std::make_unique<hsim_network>();
    handle->net = ReactionNetwork::parse(text);
    *out = handle.release();
  });
}

hsim_status hsim_network_parse_file(const char* path, hsim_network** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(std::string("cannot open network file ") + path, 0, 0);
    std::ostringstream text;
    text << in.rdbuf();
    auto handle = std::make_unique<hsim_network>();
    handle->net = ReactionNetwork::parse(text.str());
    *out = handle.release();
  });
}

void hsim_network_free(hsim_network* net) { delete net; }

char* hsim_network_serialize(const hsim_network* net) {
  if (!net) return nullptr;
  return dup_string(net->net.serialize());
}

size_t hsim_network_species_count(const hsim_network* net) {
  return net ? net->net.species().size() : 0;
}

const char* hsim_network_species_name(const hsim_network* net, size_t index) {
  if (!net || index >= net->net.species().size()) return nullptr;
  return net->net.species()[index].name.c_str();
}

int hsim_network_species_is_discrete(const hsim_network* net, size_t index) {
  if (!net || index >= net->net.species().size()) return 0;
  return net->net.species()[index].kind == SpeciesKind::discrete ? 1 : 0;
}

double hsim_network_species_init(const hsim_network* net, size_t index) {
  if (!net || index >= net->net.species().size()) return 0.0;
  return net->net.species()[index].init;
}

size_t hsim_network_reaction_count(const hsim_network* net) {
  return net ? net->net.reactions().size() : 0;
}

const char* hsim_network_reaction_id(const hsim_network* net, size_t index) {
  if (!net || index >= net->net.reactions().size()) return nullptr;
  return net->net.reactions()[index].id.c_str();
}

hsim_status hsim_partition_create(const hsim_network* net, double h_threshold,
                                  hsim_partition** out) {
  return guarded([&] {
    require(net && out, "net and out must be non-null");
    auto handle = std::make_unique<hsim_partition>();
    handle->part =
        partition_reactions(net->net, h_threshold, net->net.initial_state());
    *out = handle.release();
  });
}

void hsim_partition_free(hsim_partition* partition) { delete partition; }

int hsim_partition_is_diffusion(const hsim_partition* partition,
                                size_t reaction_index) {
  return partition && partition->part.is_diffusion(reaction_index) ? 1 : 0;
}

char* hsim_validity_report_json(const hsim_network* net,
                                const hsim_partition* partition, double h_min) {
  if (!net || !partition) return nullptr;
  const auto rows = diffusion_validity(net->net, partition->part,
                                       net->net.initial_state(), h_min);
  return dup_string(validity_report_json(net->net, rows, h_min));
}

void hsim_run_options_init(hsim_run_options* options) {
  if (!options) return;
  *options = hsim_run_options{};
  options->t_final = 1.0;
  options->h = 0.1;
  options->lambda_max = 1.0;
  options->lambda_policy = 0;
  options->sample_dt = 0.0;
  options->seed = 0;
  options->replicates = 1;
  options->parallelism = 1;
}

hsim_status hsim_ssa_trajectory(const hsim_network* net,
                                const hsim_run_options* options,
                                hsim_trajectory** out) {
  return guarded([&] {
    require(net && options && out, "net, options and out must be non-null");
    require(options->t_final > 0, "t_final must be positive");
    const auto grid = sample_grid_from(*options);
    auto handle = std::make_unique<hsim_trajectory>();
    handle->net = net->net;
    Rng rng = Rng::substream(options->seed, 0, 0, stream_tag::kSsa);
    const auto t0 = std::chrono::steady_clock::now();
    handle->traj = ssa_simulate(net->net, net->net.initial_state(), options->t_final,
                                grid, rng, true);
    handle->wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    *out = handle.release();
  });
}

hsim_status hsim_hybrid_trajectory(const hsim_network* net,
                                   const hsim_partition* partition,
                                   const hsim_run_options* options,
                                   hsim_trajectory** out) {
  return guarded([&] {
    require(net && partition && options && out,
            "net, partition, options and out must be non-null");
    const auto grid = sample_grid_from(*options);
    auto handle = std::make_unique<hsim_trajectory>();
    handle->net = net->net;
    const HybridConfig conf = hybrid_config_from(*options);
    const auto t0 = std::chrono::steady_clock::now();
    handle->traj = hybrid_simulate(net->net, partition->part, net->net.initial_state(),
                                   conf, grid, options->seed, 0, true);
    handle->wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    *out = handle.release();
  });
}

void hsim_trajectory_free(hsim_trajectory* trajectory) { delete trajectory; }

size_t hsim_trajectory_sample_count(const hsim_trajectory* trajectory) {
  return trajectory ? trajectory->traj.times.size() : 0;
}

double hsim_trajectory_time(const hsim_trajectory* trajectory, size_t sample) {
  if (!trajectory || sample >= trajectory->traj.times.size()) return 0.0;
  return trajectory->traj.times[sample];
}

double hsim_trajectory_value(const hsim_trajectory* trajectory, size_t sample,
                             size_t species_index) {
  if (!trajectory || sample >= trajectory->traj.states.size() ||
      species_index >= trajectory->net.species().size())
    return 0.0;
  return trajectory->net.value(trajectory->traj.states[sample], species_index);
}

hsim_status hsim_trajectory_write_csv(const hsim_trajectory* trajectory,
                                      const char* path) {
  return guarded([&] {
    require(trajectory && path, "trajectory and path must be non-null");
    std::ostringstream out;
    write_trajectory_csv(out, trajectory->net, trajectory->traj);
    write_file(path, out.str());
  });
}

char* hsim_trajectory_diagnostics_json(const hsim_trajectory* trajectory) {
  if (!trajectory) return nullptr;
  return dup_string(diagnostics_json(trajectory->net, trajectory->traj.diagnostics,
                                     trajectory->wall_time_seconds));
}

hsim_status hsim_ssa_ensemble(const hsim_network* net, const hsim_run_options* options,
                              hsim_ensemble** out) {
  return guarded([&] {
    require(net && options && out, "net, options and out must be non-null");
    auto handle = std::make_unique<hsim_ensemble>();
    handle->net = net->net;
    handle->result = run_ensemble(net->net, nullptr, net->net.initial_state(),
                                  ensemble_config_from(*options, EngineKind::ssa));
    *out = handle.release();
  });
}

hsim_status hsim_hybrid_ensemble(const hsim_network* net,
                                 const hsim_partition* partition,
                                 const hsim_run_options* options, hsim_ensemble** out) {
  return guarded([&] {
    require(net && partition && options && out,
            "net, partition, options and out must be non-null");
    auto handle = std::make_unique<hsim_ensemble>();
    handle->net = net->net;
    handle->result =
        run_ensemble(net->net, &partition->part, net->net.initial_state(),
                     ensemble_config_from(*options, EngineKind::hybrid));
    *out = handle.release();
  });
}

void hsim_ensemble_free(hsim_ensemble* ensemble) { delete ensemble; }

size_t hsim_ensemble_size(const hsim_ensemble* ensemble) {
  return ensemble ? ensemble->result.final_states.size() : 0;
}

double hsim_ensemble_value(const hsim_ensemble* ensemble, size_t row,
                           size_t species_index) {
  if (!ensemble || row >= ensemble->result.final_states.size() ||
      species_index >= ensemble->net.species().size())
    return 0.0;
  return ensemble->net.value(ensemble->result.final_states[row], species_index);
}

hsim_status hsim_ensemble_species_values(const hsim_ensemble* ensemble,
                                         size_t species_index, double* out,
                                         size_t capacity) {
  return guarded([&] {
    require(ensemble && out, "ensemble and out must be non-null");
    require(species_index < ensemble->net.species().size(), "species index out of range");
    require(capacity >= ensemble->result.final_states.size(),
            "output capacity too small");
    for (std::size_t i = 0; i < ensemble->result.final_states.size(); ++i)
      out[i] = ensemble->net.value(ensemble->result.final_states[i], species_index);
  });
}

double hsim_ensemble_wall_time(const hsim_ensemble* ensemble) {
  return ensemble ? ensemble->result.wall_time_seconds : 0.0;
}

hsim_status hsim_ensemble_write_csv(const hsim_ensemble* ensemble, const char* path) {
  return guarded([&] {
    require(ensemble && path, "ensemble and path must be non-null");
    std::ostringstream out;
    write_ensemble_csv(out, ensemble->net, ensemble->result);
    write_file(path, out.str());
  });
}

char* hsim_ensemble_stats_json(const hsim_ensemble* ensemble) {
  if (!ensemble) return nullptr;
  return dup_string(stats_json(ensemble->net, ensemble->result));
}

char* hsim_ensemble_diagnostics_json(const hsim_ensemble* ensemble) {
  if (!ensemble) return nullptr;
  return dup_string(diagnostics_json(ensemble->net, ensemble->result.totals,
                                     ensemble->result.wall_time_seconds));
}

hsim_status hsim_ks_two_sample(const double* a, size_t na, const double* b, size_t nb,
                               double* d_out, double* p_out) {
  return guarded([&] {
    require(a && b && d_out && p_out, "samples and outputs must be non-null");
    const KsResult res = ks_two_sample({a, na}, {b, nb});
    *d_out = res.d;
    *p_out = res.p_value;
  });
}

hsim_status hsim_histogram_csv(const double* samples, size_t n, size_t bins,
                               const char* path) {
  return guarded([&] {
    require(samples && path, "samples and path must be non-null");
    const Histogram hist = histogram({samples, n}, bins);
    std::ostringstream out;
    write_histogram_csv(out, hist);
    write_file(path, out.str());
  });
}

hsim_status hsim_convergence_run(const hsim_network* net,
                                 const hsim_partition* partition,
                                 const hsim_run_options* options, const double* h_list,
                                 size_t h_count, int drift_only,
                                 hsim_convergence** out) {
  return guarded([&] {
    require(net && partition && options && h_list && out,
            "net, partition, options, h_list and out must be non-null");
    ConvergenceConfig conf;
    conf.t_final = options->t_final;
    conf.h_list.assign(h_list, h_list + h_count);
    conf.replicates = static_cast<std::size_t>(options->replicates);
    conf.master_seed = options->seed;
    conf.lambda_max = options->lambda_max;
    conf.drift_only = drift_only != 0;
    auto handle = std::make_unique<hsim_convergence>();
    handle->table =
        convergence_study(net->net, partition->part, net->net.initial_state(), conf);
    *out = handle.release();
  });
}

void hsim_convergence_free(hsim_convergence* convergence) { delete convergence; }

size_t hsim_convergence_row_count(const hsim_convergence* convergence) {
  return convergence ? convergence->table.rows.size() : 0;
}

void hsim_convergence_row(const hsim_convergence* convergence, size_t index, double* h,
                          double* mse, uint64_t* n) {
  if (!convergence || index >= convergence->table.rows.size()) return;
  const ConvergenceRow& row = convergence->table.rows[index];
  if (h) *h = row.h;
  if (mse) *mse = row.mse;
  if (n) *n = row.n;
}

double hsim_convergence_slope(const hsim_convergence* convergence) {
  return convergence ? convergence->table.slope : 0.0;
}

int hsim_convergence_monotone_warning(const hsim_convergence* convergence) {
  return convergence && convergence->table.monotone_warning ? 1 : 0;
}

hsim_status hsim_convergence_write_csv(const hsim_convergence* convergence,
                                       const char* path) {
  return guarded([&] {
    require(convergence && path, "convergence and path must be non-null");
    std::ostringstream out;
    write_convergence_csv(out, convergence->table);
    write_file(path, out.str());
  });
}

hsim_status hsim_benchmark_run(const hsim_network* net, const hsim_partition* partition,
                               const hsim_run_options* options, const double* h_list,
                               size_t h_count, hsim_benchmark** out) {
  return guarded([&] {
    require(net && partition && options && h_list && out,
            "net, partition, options, h_list and out must be non-null");
    require(options->replicates >= 1, "replicates must be at least 1");
    auto handle = std::make_unique<hsim_benchmark>();
    handle->rows = speedup_benchmark(
        net->net, partition->part, net->net.initial_state(), options->t_final,
        {h_list, h_count}, static_cast<std::size_t>(options->replicates),
        options->seed, options->lambda_max,
        options->parallelism == 0 ? 1 : options->parallelism);
    *out = handle.release();
  });
}

void hsim_benchmark_free(hsim_benchmark* benchmark) { delete benchmark; }

size_t hsim_benchmark_row_count(const hsim_benchmark* benchmark) {
  return benchmark ? benchmark->rows.size() : 0;
}

void hsim_benchmark_row(const hsim_benchmark* benchmark, size_t index, double* h,
                        double* t_ssa, double* t_hybrid, double* ratio) {
  if (!benchmark || index >= benchmark->rows.size()) return;
  const BenchRow& row = benchmark->rows[index];
  if (h) *h = row.h;
  if (t_ssa) *t_ssa = row.t_ssa;
  if (t_hybrid) *t_hybrid = row.t_hybrid;
  if (ratio) *ratio = row.ratio;
}

hsim_status hsim_benchmark_write_csv(const hsim_benchmark* benchmark,
                                     const char* path) {
  return guarded([&] {
    require(benchmark && path, "benchmark and path must be non-null");
    std::ostringstream out;
    write_benchmark_csv(out, benchmark->rows);
    write_file(path, out.str());
  });
}

}  // extern "C"
