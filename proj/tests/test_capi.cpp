#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hybridsim/hybridsim.h"

namespace {

const std::string kGeneBurst = std::string(HSIM_NETWORKS_DIR) + "/gene_burst.rxn";

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Net {
  hsim_network* net = nullptr;
  ~Net() { hsim_network_free(net); }
};

struct Part {
  hsim_partition* part = nullptr;
  ~Part() { hsim_partition_free(part); }
};

}  // namespace

TEST_CASE("capi: parse, introspect and serialize a network") {
  Net net;
  REQUIRE(hsim_network_parse_file(kGeneBurst.c_str(), &net.net) == HSIM_OK);
  CHECK(hsim_network_species_count(net.net) == 4);
  CHECK(hsim_network_reaction_count(net.net) == 5);
  CHECK(std::string(hsim_network_species_name(net.net, 2)) == "S3");
  CHECK(hsim_network_species_is_discrete(net.net, 0) == 1);
  CHECK(hsim_network_species_is_discrete(net.net, 2) == 0);
  CHECK(hsim_network_species_init(net.net, 2) == 1000.0);
  CHECK(std::string(hsim_network_reaction_id(net.net, 4)) == "r5");

  char* text = hsim_network_serialize(net.net);
  REQUIRE(text != nullptr);
  Net again;
  REQUIRE(hsim_network_parse(text, &again.net) == HSIM_OK);
  CHECK(hsim_network_species_count(again.net) == 4);
  hsim_string_free(text);
}

TEST_CASE("capi: parse errors set status and message") {
  hsim_network* net = nullptr;
  CHECK(hsim_network_parse("species A discrete init=-1", &net) == HSIM_ERROR_PARSE);
  CHECK(net == nullptr);
  CHECK(std::strlen(hsim_last_error()) > 0);
  CHECK(hsim_network_parse_file("/nonexistent/x.rxn", &net) == HSIM_ERROR_PARSE);
  CHECK(hsim_network_parse(nullptr, &net) == HSIM_ERROR_INVALID_ARGUMENT);
}

TEST_CASE("capi: partition and validity report") {
  Net net;
  REQUIRE(hsim_network_parse_file(kGeneBurst.c_str(), &net.net) == HSIM_OK);
  Part part;
  REQUIRE(hsim_partition_create(net.net, 100.0, &part.part) == HSIM_OK);
  CHECK(hsim_partition_is_diffusion(part.part, 3) == 1);  // r4
  CHECK(hsim_partition_is_diffusion(part.part, 4) == 1);  // r5
  CHECK(hsim_partition_is_diffusion(part.part, 0) == 0);  // r1

  char* report = hsim_validity_report_json(net.net, part.part, 50.0);
  REQUIRE(report != nullptr);
  const std::string json(report);
  CHECK(json.find("\"r4\"") != std::string::npos);
  CHECK(json.find("\"r5\"") != std::string::npos);
  hsim_string_free(report);
}

TEST_CASE("capi: ssa trajectory and csv output") {
  Net net;
  REQUIRE(hsim_network_parse_file(kGeneBurst.c_str(), &net.net) == HSIM_OK);
  hsim_run_options opt;
  hsim_run_options_init(&opt);
  opt.t_final = 2.0;
  opt.sample_dt = 0.5;
  opt.seed = 7;
  hsim_trajectory* traj = nullptr;
  REQUIRE(hsim_ssa_trajectory(net.net, &opt, &traj) == HSIM_OK);
  REQUIRE(hsim_trajectory_sample_count(traj) == 5);  // 0, 0.5, 1.0, 1.5, 2.0
  CHECK(hsim_trajectory_time(traj, 0) == 0.0);
  CHECK(hsim_trajectory_value(traj, 0, 2) == 1000.0);
  const auto csv_path = temp_file("hsim_capi_traj.csv");
  REQUIRE(hsim_trajectory_write_csv(traj, csv_path.string().c_str()) == HSIM_OK);
  const std::string csv = slurp(csv_path);
  CHECK(csv.rfind("t,S1,S2,S3,S4\n", 0) == 0);
  hsim_trajectory_free(traj);
  std::filesystem::remove(csv_path);
}

TEST_CASE("capi: hybrid ensemble, stats and diagnostics") {
  Net net;
  REQUIRE(hsim_network_parse_file(kGeneBurst.c_str(), &net.net) == HSIM_OK);
  Part part;
  REQUIRE(hsim_partition_create(net.net, 100.0, &part.part) == HSIM_OK);
  hsim_run_options opt;
  hsim_run_options_init(&opt);
  opt.t_final = 5.0;
  opt.h = 0.1;
  opt.lambda_max = 1.5;
  opt.replicates = 16;
  opt.parallelism = 4;
  opt.seed = 99;
  hsim_ensemble* ens = nullptr;
  REQUIRE(hsim_hybrid_ensemble(net.net, part.part, &opt, &ens) == HSIM_OK);
  REQUIRE(hsim_ensemble_size(ens) == 16);
  CHECK(hsim_ensemble_wall_time(ens) > 0.0);

  std::vector<double> x1(16);
  REQUIRE(hsim_ensemble_species_values(ens, 2, x1.data(), x1.size()) == HSIM_OK);
  for (double v : x1) CHECK(v >= 0.0);
  CHECK(hsim_ensemble_species_values(ens, 2, x1.data(), 4) ==
        HSIM_ERROR_INVALID_ARGUMENT);

  char* stats = hsim_ensemble_stats_json(ens);
  REQUIRE(stats != nullptr);
  CHECK(std::string(stats).find("\"hybrid\"") != std::string::npos);
  hsim_string_free(stats);
  char* diag = hsim_ensemble_diagnostics_json(ens);
  REQUIRE(diag != nullptr);
  CHECK(std::string(diag).find("lambda_max_used") != std::string::npos);
  hsim_string_free(diag);
  hsim_ensemble_free(ens);
}

TEST_CASE("capi: option validation surfaces as invalid-argument") {
  Net net;
  REQUIRE(hsim_network_parse_file(kGeneBurst.c_str(), &net.net) == HSIM_OK);
  hsim_run_options opt;
  hsim_run_options_init(&opt);
  opt.t_final = -1.0;
  hsim_ensemble* ens = nullptr;
  CHECK(hsim_ssa_ensemble(net.net, &opt, &ens) == HSIM_ERROR_INVALID_ARGUMENT);
  CHECK(ens == nullptr);
}

TEST_CASE("capi: ks test and histogram writer") {
  const double a[] = {1.0, 2.0, 3.0};
  const double b[] = {1.0, 2.0, 4.0};
  double d = 0.0, p = 0.0;
  REQUIRE(hsim_ks_two_sample(a, 3, b, 3, &d, &p) == HSIM_OK);
  CHECK(d == doctest::Approx(1.0 / 3.0));
  CHECK(p > 0.0);

  const auto hist_path = temp_file("hsim_capi_hist.csv");
  const double samples[] = {1.0, 1.0, 2.0};
  REQUIRE(hsim_histogram_csv(samples, 3, 2, hist_path.string().c_str()) == HSIM_OK);
  const std::string csv = slurp(hist_path);
  CHECK(csv.rfind("bin_lo,bin_hi,count,frequency\n", 0) == 0);
  std::filesystem::remove(hist_path);
}

TEST_CASE("capi: convergence and benchmark runs") {
  Net net;
  const std::string branching = std::string(HSIM_NETWORKS_DIR) + "/balanced_branching.rxn";
  REQUIRE(hsim_network_parse_file(branching.c_str(), &net.net) == HSIM_OK);
  Part part;
  REQUIRE(hsim_partition_create(net.net, 1.0, &part.part) == HSIM_OK);

  hsim_run_options opt;
  hsim_run_options_init(&opt);
  opt.t_final = 1.0;
  opt.replicates = 10;
  opt.lambda_max = 1.0;
  opt.seed = 5;
  const double hs[] = {0.25, 0.125, 0.0625, 1.0 / 256};
  hsim_convergence* conv = nullptr;
  REQUIRE(hsim_convergence_run(net.net, part.part, &opt, hs, 4, 0, &conv) == HSIM_OK);
  REQUIRE(hsim_convergence_row_count(conv) == 4);
  double h = 0, mse = 0;
  std::uint64_t n = 0;
  hsim_convergence_row(conv, 0, &h, &mse, &n);
  CHECK(h == 0.25);
  CHECK(n == 10);
  hsim_convergence_row(conv, 3, &h, &mse, &n);
  CHECK(h == 1.0 / 256);
  CHECK(mse == 0.0);
  const auto conv_path = temp_file("hsim_capi_conv.csv");
  REQUIRE(hsim_convergence_write_csv(conv, conv_path.string().c_str()) == HSIM_OK);
  CHECK(slurp(conv_path).rfind("h,mse,n\n", 0) == 0);
  std::filesystem::remove(conv_path);
  hsim_convergence_free(conv);

  Net ff;
  const std::string flip = std::string(HSIM_NETWORKS_DIR) + "/flip_flop.rxn";
  REQUIRE(hsim_network_parse_file(flip.c_str(), &ff.net) == HSIM_OK);
  Part ffp;
  REQUIRE(hsim_partition_create(ff.net, 1e9, &ffp.part) == HSIM_OK);
  opt.t_final = 1.0;
  opt.replicates = 20;
  opt.lambda_max = 12.0;
  const double bench_h[] = {0.5};
  hsim_benchmark* bench = nullptr;
  REQUIRE(hsim_benchmark_run(ff.net, ffp.part, &opt, bench_h, 1, &bench) == HSIM_OK);
  REQUIRE(hsim_benchmark_row_count(bench) == 1);
  double bh = 0, ts = 0, th = 0, ratio = 0;
  hsim_benchmark_row(bench, 0, &bh, &ts, &th, &ratio);
  CHECK(bh == 0.5);
  CHECK(ts > 0.0);
  CHECK(th > 0.0);
  hsim_benchmark_free(bench);
}
