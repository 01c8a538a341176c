// hybridsim command-line front end. Talks to the engine exclusively through
// the C API in hybridsim/hybridsim.h.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hybridsim/hybridsim.h"

namespace {

using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitRuntime = 4;

[[noreturn]] void die(const std::string& category, const std::string& message,
                      int code) {
  std::cerr << json{{"error", category}, {"message", message}}.dump() << "\n";
  std::exit(code);
}

void check(hsim_status status) {
  switch (status) {
    case HSIM_OK:
      return;
    case HSIM_ERROR_INVALID_ARGUMENT:
      die("usage", hsim_last_error(), kExitUsage);
    case HSIM_ERROR_PARSE:
      die("parse", hsim_last_error(), kExitParse);
    case HSIM_ERROR_IO:
      die("io", hsim_last_error(), kExitRuntime);
    case HSIM_ERROR_SIMULATION:
    default:
      die("simulation", hsim_last_error(), kExitRuntime);
  }
}

std::string take_string(char* s) {
  if (!s) die("simulation", "engine returned no data", kExitRuntime);
  std::string out(s);
  hsim_string_free(s);
  return out;
}

struct Options {
  std::string network_path;
  std::string out_dir = "out";
  double t_final = 0.0;
  double h = 0.1;
  double lambda_max = 0.0;
  std::string lambda_policy = "fail";
  std::uint64_t replicates = 1;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double sample_dt = 0.0;
  double h_threshold = 100.0;
  unsigned parallelism = 1;
  std::vector<double> h_list;
  std::size_t bins = 40;
  double alpha = 0.01;
  bool drift_only = false;
};

hsim_run_options to_run_options(const Options& opt) {
  hsim_run_options run;
  hsim_run_options_init(&run);
  run.t_final = opt.t_final;
  run.h = opt.h;
  run.lambda_max = opt.lambda_max;
  run.lambda_policy = opt.lambda_policy == "retry" ? 1 : 0;
  run.sample_dt = opt.sample_dt;
  run.seed = opt.seed;
  run.replicates = opt.replicates;
  run.parallelism = opt.parallelism;
  return run;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die("parse", "cannot open network file " + path, kExitParse);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

json options_json(const std::string& command, const Options& opt) {
  return json{{"command", command},
              {"network_file", opt.network_path},
              {"T", opt.t_final},
              {"h", opt.h},
              {"lambda_max", opt.lambda_max},
              {"lambda_policy", opt.lambda_policy},
              {"replicates", opt.replicates},
              {"seed", opt.seed},
              {"sample_dt", opt.sample_dt},
              {"h_threshold", opt.h_threshold},
              {"parallelism", opt.parallelism},
              {"h_list", opt.h_list},
              {"bins", opt.bins},
              {"alpha", opt.alpha},
              {"drift_only", opt.drift_only},
              {"out", opt.out_dir}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) die("io", "cannot write " + path.string(), kExitRuntime);
  out << text;
}

// Manifest carrying the complete configuration, seed and network text: enough
// to reproduce the run bit for bit.
void write_manifest(const Options& opt, const std::string& command,
                    const std::vector<std::string>& outputs) {
  json manifest = {{"config", options_json(command, opt)},
                   {"network_text", read_file(opt.network_path)},
                   {"outputs", outputs}};
  write_text(std::filesystem::path(opt.out_dir) / "manifest.json",
             manifest.dump(2) + "\n");
}

struct NetworkHandle {
  hsim_network* net = nullptr;
  ~NetworkHandle() { hsim_network_free(net); }
};

struct PartitionHandle {
  hsim_partition* part = nullptr;
  ~PartitionHandle() { hsim_partition_free(part); }
};

void load_network(const Options& opt, NetworkHandle& net) {
  check(hsim_network_parse_file(opt.network_path.c_str(), &net.net));
}

void ensure_out_dir(const Options& opt) {
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) die("io", "cannot create output directory " + opt.out_dir, kExitRuntime);
}

std::vector<std::string> species_names(const hsim_network* net) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < hsim_network_species_count(net); ++i)
    names.emplace_back(hsim_network_species_name(net, i));
  return names;
}

void write_trajectory_outputs(const Options& opt, const NetworkHandle& net,
                              const PartitionHandle* part,
                              std::vector<std::string>& outputs) {
  if (opt.sample_dt <= 0) return;
  const hsim_run_options run = to_run_options(opt);
  hsim_trajectory* traj = nullptr;
  if (part)
    check(hsim_hybrid_trajectory(net.net, part->part, &run, &traj));
  else
    check(hsim_ssa_trajectory(net.net, &run, &traj));
  const auto path = std::filesystem::path(opt.out_dir) / "trajectory.csv";
  check(hsim_trajectory_write_csv(traj, path.string().c_str()));
  outputs.push_back("trajectory.csv");
  if (part) {
    write_text(std::filesystem::path(opt.out_dir) / "trajectory_diagnostics.json",
               take_string(hsim_trajectory_diagnostics_json(traj)) + "\n");
    outputs.push_back("trajectory_diagnostics.json");
  }
  hsim_trajectory_free(traj);
}

int run_engine_command(const Options& opt, bool hybrid) {
  NetworkHandle net;
  load_network(opt, net);
  PartitionHandle part;
  if (hybrid) check(hsim_partition_create(net.net, opt.h_threshold, &part.part));
  ensure_out_dir(opt);

  const hsim_run_options run = to_run_options(opt);
  hsim_ensemble* ens = nullptr;
  if (hybrid)
    check(hsim_hybrid_ensemble(net.net, part.part, &run, &ens));
  else
    check(hsim_ssa_ensemble(net.net, &run, &ens));

  std::vector<std::string> outputs;
  const auto out_dir = std::filesystem::path(opt.out_dir);
  check(hsim_ensemble_write_csv(ens, (out_dir / "final_states.csv").string().c_str()));
  outputs.push_back("final_states.csv");
  write_text(out_dir / "stats.json", take_string(hsim_ensemble_stats_json(ens)) + "\n");
  outputs.push_back("stats.json");
  if (hybrid) {
    write_text(out_dir / "diagnostics.json",
               take_string(hsim_ensemble_diagnostics_json(ens)) + "\n");
    outputs.push_back("diagnostics.json");
  }
  std::cout << take_string(hsim_ensemble_stats_json(ens)) << "\n";
  hsim_ensemble_free(ens);

  write_trajectory_outputs(opt, net, hybrid ? &part : nullptr, outputs);
  outputs.push_back("manifest.json");
  write_manifest(opt, hybrid ? "hybrid" : "ssa", outputs);
  return 0;
}

int run_check(const Options& opt) {
  NetworkHandle net;
  load_network(opt, net);
  PartitionHandle part;
  check(hsim_partition_create(net.net, opt.h_threshold, &part.part));

  std::size_t discrete = 0;
  const std::size_t n_species = hsim_network_species_count(net.net);
  for (std::size_t i = 0; i < n_species; ++i)
    discrete += hsim_network_species_is_discrete(net.net, i) ? 1 : 0;
  std::cout << "species: " << n_species << " (" << discrete << " discrete, "
            << n_species - discrete << " continuous)\n";
  std::cout << "reactions: " << hsim_network_reaction_count(net.net) << "\n";

  std::string r1, rd;
  for (std::size_t r = 0; r < hsim_network_reaction_count(net.net); ++r) {
    std::string& side = hsim_partition_is_diffusion(part.part, r) ? r1 : rd;
    if (!side.empty()) side += " ";
    side += hsim_network_reaction_id(net.net, r);
  }
  std::cout << "R1 (diffusion): " << (r1.empty() ? "-" : r1) << "\n";
  std::cout << "R_d (jump): " << (rd.empty() ? "-" : rd) << "\n";

  const json report =
      json::parse(take_string(hsim_validity_report_json(net.net, part.part, opt.h_threshold)));
  std::cout << "diffusion validity at the initial state (h_min=" << opt.h_threshold
            << "):\n";
  for (const auto& row : report.at("diffusion_reactions"))
    std::cout << "  " << row.at("reaction").get<std::string>()
              << ": h=" << row.at("h").get<double>()
              << (row.at("pass").get<bool>() ? " ok" : " FLAGGED") << "\n";
  return 0;
}

int run_compare(const Options& opt) {
  NetworkHandle net;
  load_network(opt, net);
  PartitionHandle part;
  check(hsim_partition_create(net.net, opt.h_threshold, &part.part));
  ensure_out_dir(opt);
  const auto out_dir = std::filesystem::path(opt.out_dir);

  const hsim_run_options run = to_run_options(opt);
  hsim_ensemble* ssa = nullptr;
  hsim_ensemble* hyb = nullptr;
  check(hsim_ssa_ensemble(net.net, &run, &ssa));
  check(hsim_hybrid_ensemble(net.net, part.part, &run, &hyb));

  std::vector<std::string> outputs;
  check(hsim_ensemble_write_csv(ssa, (out_dir / "ssa_final.csv").string().c_str()));
  check(hsim_ensemble_write_csv(hyb, (out_dir / "hybrid_final.csv").string().c_str()));
  outputs.push_back("ssa_final.csv");
  outputs.push_back("hybrid_final.csv");

  const auto names = species_names(net.net);
  const std::size_t n_ssa = hsim_ensemble_size(ssa);
  const std::size_t n_hyb = hsim_ensemble_size(hyb);
  json ks_species = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<double> a(n_ssa), b(n_hyb);
    check(hsim_ensemble_species_values(ssa, i, a.data(), a.size()));
    check(hsim_ensemble_species_values(hyb, i, b.data(), b.size()));
    double d = 0, p = 0;
    check(hsim_ks_two_sample(a.data(), a.size(), b.data(), b.size(), &d, &p));
    ks_species[names[i]] = {{"d", d}, {"p", p}, {"reject_at_alpha", p < opt.alpha}};
    std::cout << names[i] << ": D=" << d << " p=" << p
              << (p < opt.alpha ? "  REJECT" : "") << "\n";
    const std::string ssa_hist = "hist_" + names[i] + "_ssa.csv";
    const std::string hyb_hist = "hist_" + names[i] + "_hybrid.csv";
    check(hsim_histogram_csv(a.data(), a.size(), opt.bins,
                             (out_dir / ssa_hist).string().c_str()));
    check(hsim_histogram_csv(b.data(), b.size(), opt.bins,
                             (out_dir / hyb_hist).string().c_str()));
    outputs.push_back(ssa_hist);
    outputs.push_back(hyb_hist);
  }
  const json ks_report = {{"alpha", opt.alpha},
                          {"ssa_replicates", n_ssa},
                          {"hybrid_replicates", n_hyb},
                          {"T", opt.t_final},
                          {"species", ks_species}};
  write_text(out_dir / "ks_report.json", ks_report.dump(2) + "\n");
  outputs.push_back("ks_report.json");

  write_text(out_dir / "ssa_stats.json", take_string(hsim_ensemble_stats_json(ssa)) + "\n");
  write_text(out_dir / "hybrid_stats.json",
             take_string(hsim_ensemble_stats_json(hyb)) + "\n");
  write_text(out_dir / "hybrid_diagnostics.json",
             take_string(hsim_ensemble_diagnostics_json(hyb)) + "\n");
  outputs.push_back("ssa_stats.json");
  outputs.push_back("hybrid_stats.json");
  outputs.push_back("hybrid_diagnostics.json");

  hsim_ensemble_free(ssa);
  hsim_ensemble_free(hyb);
  outputs.push_back("manifest.json");
  write_manifest(opt, "compare", outputs);
  return 0;
}

int run_converge(const Options& opt) {
  NetworkHandle net;
  load_network(opt, net);
  PartitionHandle part;
  check(hsim_partition_create(net.net, opt.h_threshold, &part.part));
  ensure_out_dir(opt);
  const auto out_dir = std::filesystem::path(opt.out_dir);

  const hsim_run_options run = to_run_options(opt);
  hsim_convergence* conv = nullptr;
  check(hsim_convergence_run(net.net, part.part, &run, opt.h_list.data(),
                             opt.h_list.size(), opt.drift_only ? 1 : 0, &conv));
  check(hsim_convergence_write_csv(conv, (out_dir / "convergence.csv").string().c_str()));

  const double slope = hsim_convergence_slope(conv);
  json rows = json::array();
  for (std::size_t i = 0; i < hsim_convergence_row_count(conv); ++i) {
    double h = 0, mse = 0;
    std::uint64_t n = 0;
    hsim_convergence_row(conv, i, &h, &mse, &n);
    rows.push_back({{"h", h}, {"mse", mse}, {"n", n}});
  }
  const bool warn = hsim_convergence_monotone_warning(conv) != 0;
  const json summary = {{"slope", slope},
                        {"drift_only", opt.drift_only},
                        {"monotone_warning", warn},
                        {"rows", rows}};
  write_text(out_dir / "convergence.json", summary.dump(2) + "\n");
  std::cout << "fitted log-log slope (mse vs h): " << slope << "\n";
  if (warn)
    std::cerr << "warning: mean-square errors are not monotone in h "
                 "(Monte Carlo noise)\n";
  hsim_convergence_free(conv);
  write_manifest(opt, "converge", {"convergence.csv", "convergence.json", "manifest.json"});
  return 0;
}

int run_bench(const Options& opt) {
  NetworkHandle net;
  load_network(opt, net);
  PartitionHandle part;
  check(hsim_partition_create(net.net, opt.h_threshold, &part.part));
  ensure_out_dir(opt);
  const auto out_dir = std::filesystem::path(opt.out_dir);

  const hsim_run_options run = to_run_options(opt);
  hsim_benchmark* bench = nullptr;
  check(hsim_benchmark_run(net.net, part.part, &run, opt.h_list.data(),
                           opt.h_list.size(), &bench));
  check(hsim_benchmark_write_csv(bench, (out_dir / "benchmark.csv").string().c_str()));
  std::cout << "h,t_ssa,t_hybrid,ratio\n";
  for (std::size_t i = 0; i < hsim_benchmark_row_count(bench); ++i) {
    double h = 0, ts = 0, th = 0, ratio = 0;
    hsim_benchmark_row(bench, i, &h, &ts, &th, &ratio);
    std::cout << h << "," << ts << "," << th << "," << ratio << "\n";
  }
  hsim_benchmark_free(bench);
  write_manifest(opt, "bench", {"benchmark.csv", "manifest.json"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid jump-diffusion simulator for stochastic reaction networks"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);

  Options opt;
  std::string h_list_text;

  auto add_common = [&](CLI::App* cmd, bool needs_T) {
    cmd->set_help_flag("--help", "print help");  // frees -h for the grid step
    cmd->add_option("--network", opt.network_path, "network file (.rxn)")
        ->required();
    auto* t = cmd->add_option("--T", opt.t_final, "time horizon")
                  ->check(CLI::PositiveNumber);
    if (needs_T) t->required();
    cmd->add_option("--replicates", opt.replicates, "Monte Carlo replicates")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", opt.seed, "master seed (falls back to HYBRIDSIM_SEED)")
        ->each([&](const std::string&) { opt.seed_given = true; });
    cmd->add_option("--sample-dt", opt.sample_dt,
                    "trajectory sampling step (0 disables trajectory output)");
    cmd->add_option("--h-threshold", opt.h_threshold,
                    "combinatorial-weight threshold for auto partitioning")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--parallelism", opt.parallelism, "worker threads")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", opt.out_dir, "output directory (default: out)");
    return cmd;
  };
  auto add_hybrid = [&](CLI::App* cmd, bool required) {
    auto* h = cmd->add_option("--h", opt.h, "diffusion grid step")
                  ->check(CLI::PositiveNumber);
    auto* lam = cmd->add_option("--lambda-max", opt.lambda_max,
                                "reference Poisson intensity")
                    ->check(CLI::PositiveNumber);
    if (required) {
      h->required();
      lam->required();
    }
    cmd->add_option("--lambda-policy", opt.lambda_policy,
                    "on intensity bound violation: fail or retry (doubled)")
        ->check(CLI::IsMember({"fail", "retry"}));
  };
  auto add_h_list = [&](CLI::App* cmd) {
    cmd->add_option("--h-list", h_list_text, "comma-separated list of grid steps")
        ->required();
  };

  CLI::App* c_ssa = add_common(app.add_subcommand("ssa", "exact (SSA/KMC) ensemble"), true);
  (void)c_ssa;
  CLI::App* c_hyb = add_common(
      app.add_subcommand("hybrid", "hybrid jump-diffusion ensemble"), true);
  add_hybrid(c_hyb, true);
  CLI::App* c_cmp = add_common(
      app.add_subcommand("compare",
                         "run both engines and compare final-state distributions"),
      true);
  add_hybrid(c_cmp, true);
  c_cmp->add_option("--bins", opt.bins, "histogram bins")->check(CLI::PositiveNumber);
  c_cmp->add_option("--alpha", opt.alpha, "KS significance level")
      ->check(CLI::PositiveNumber);
  CLI::App* c_conv = add_common(
      app.add_subcommand("converge", "coupled strong-convergence study"), true);
  add_hybrid(c_conv, false);
  add_h_list(c_conv);
  c_conv->add_flag("--drift-only", opt.drift_only,
                   "zero the Wiener increments (deterministic control)");
  CLI::App* c_bench = add_common(
      app.add_subcommand("bench", "exact-vs-hybrid speedup benchmark"), true);
  add_hybrid(c_bench, true);
  add_h_list(c_bench);
  CLI::App* c_check = add_common(
      app.add_subcommand("check", "parse, partition and report diffusion validity"),
      false);
  (void)c_check;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    die("usage", e.what(), kExitUsage);
  }

  if (!opt.seed_given) {
    if (const char* env = std::getenv("HYBRIDSIM_SEED")) {
      try {
        opt.seed = std::stoull(env);
      } catch (const std::exception&) {
        die("usage", "HYBRIDSIM_SEED is not an integer", kExitUsage);
      }
    }
  }
  if (!h_list_text.empty()) {
    std::istringstream in(h_list_text);
    std::string item;
    while (std::getline(in, item, ',')) {
      try {
        opt.h_list.push_back(std::stod(item));
      } catch (const std::exception&) {
        die("usage", "invalid --h-list entry '" + item + "'", kExitUsage);
      }
    }
  }

  if (app.got_subcommand("ssa")) return run_engine_command(opt, false);
  if (app.got_subcommand("hybrid")) return run_engine_command(opt, true);
  if (app.got_subcommand("compare")) return run_compare(opt);
  if (app.got_subcommand("converge")) return run_converge(opt);
  if (app.got_subcommand("bench")) return run_bench(opt);
  if (app.got_subcommand("check")) return run_check(opt);
  die("usage", "no subcommand", kExitUsage);
}
