/* hybridsim - hybrid jump-diffusion simulation of chemical reaction networks.
 *
 * C interface to the simulation core. All objects are opaque handles created
 * and destroyed through this API; every fallible call returns an hsim_status
 * and leaves a human-readable message in hsim_last_error() (thread-local).
 * Strings returned as char* are owned by the caller and must be released with
 * hsim_string_free().
 */
#ifndef HYBRIDSIM_H
#define HYBRIDSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HSIM_API __declspec(dllexport)
#else
#define HSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hsim_status {
  HSIM_OK = 0,
  HSIM_ERROR_INVALID_ARGUMENT = 1,
  HSIM_ERROR_PARSE = 2,
  HSIM_ERROR_SIMULATION = 3,
  HSIM_ERROR_IO = 4
} hsim_status;

typedef struct hsim_network hsim_network;
typedef struct hsim_partition hsim_partition;
typedef struct hsim_trajectory hsim_trajectory;
typedef struct hsim_ensemble hsim_ensemble;
typedef struct hsim_convergence hsim_convergence;
typedef struct hsim_benchmark hsim_benchmark;

/* Message describing the most recent failure on this thread. */
HSIM_API const char* hsim_last_error(void);
HSIM_API void hsim_string_free(char* s);

/* ---- networks ---------------------------------------------------------- */

HSIM_API hsim_status hsim_network_parse(const char* text, hsim_network** out);
HSIM_API hsim_status hsim_network_parse_file(const char* path, hsim_network** out);
HSIM_API void hsim_network_free(hsim_network* net);
/* Round-tripping serialization back to the network DSL. */
HSIM_API char* hsim_network_serialize(const hsim_network* net);

HSIM_API size_t hsim_network_species_count(const hsim_network* net);
HSIM_API const char* hsim_network_species_name(const hsim_network* net, size_t index);
HSIM_API int hsim_network_species_is_discrete(const hsim_network* net, size_t index);
HSIM_API double hsim_network_species_init(const hsim_network* net, size_t index);
HSIM_API size_t hsim_network_reaction_count(const hsim_network* net);
HSIM_API const char* hsim_network_reaction_id(const hsim_network* net, size_t index);

/* ---- partition and diagnostics ----------------------------------------- */

/* Partition at the network's initial state: hinted reactions keep their
 * group; automatic reactions diffuse iff h_r(initial) >= h_threshold and the
 * reaction changes no discrete species. */
HSIM_API hsim_status hsim_partition_create(const hsim_network* net, double h_threshold,
                                           hsim_partition** out);
HSIM_API void hsim_partition_free(hsim_partition* partition);
HSIM_API int hsim_partition_is_diffusion(const hsim_partition* partition,
                                         size_t reaction_index);

/* JSON report of h_r at the initial state for every diffusion reaction,
 * flagging h_r < h_min. */
HSIM_API char* hsim_validity_report_json(const hsim_network* net,
                                         const hsim_partition* partition, double h_min);

/* ---- runs --------------------------------------------------------------- */

typedef struct hsim_run_options {
  double t_final;       /* horizon (> 0) */
  double h;             /* hybrid diffusion grid step */
  double lambda_max;    /* hybrid reference intensity */
  int lambda_policy;    /* 0 = fail on bound violation, 1 = retry doubled */
  double sample_dt;     /* trajectory sampling step; <= 0 records only 0 and T */
  uint64_t seed;        /* master seed */
  uint64_t replicates;  /* ensemble size */
  unsigned parallelism; /* worker threads for ensembles */
} hsim_run_options;

/* Fills an options struct with defaults (1 replicate, serial, sampling off). */
HSIM_API void hsim_run_options_init(hsim_run_options* options);

/* Single trajectory (= ensemble replicate 0 of the same seed). */
HSIM_API hsim_status hsim_ssa_trajectory(const hsim_network* net,
                                         const hsim_run_options* options,
                                         hsim_trajectory** out);
HSIM_API hsim_status hsim_hybrid_trajectory(const hsim_network* net,
                                            const hsim_partition* partition,
                                            const hsim_run_options* options,
                                            hsim_trajectory** out);
HSIM_API void hsim_trajectory_free(hsim_trajectory* trajectory);
HSIM_API size_t hsim_trajectory_sample_count(const hsim_trajectory* trajectory);
HSIM_API double hsim_trajectory_time(const hsim_trajectory* trajectory, size_t sample);
HSIM_API double hsim_trajectory_value(const hsim_trajectory* trajectory, size_t sample,
                                      size_t species_index);
HSIM_API hsim_status hsim_trajectory_write_csv(const hsim_trajectory* trajectory,
                                               const char* path);
HSIM_API char* hsim_trajectory_diagnostics_json(const hsim_trajectory* trajectory);

/* Monte Carlo ensembles; final states at t_final per replicate. */
HSIM_API hsim_status hsim_ssa_ensemble(const hsim_network* net,
                                       const hsim_run_options* options,
                                       hsim_ensemble** out);
HSIM_API hsim_status hsim_hybrid_ensemble(const hsim_network* net,
                                          const hsim_partition* partition,
                                          const hsim_run_options* options,
                                          hsim_ensemble** out);
HSIM_API void hsim_ensemble_free(hsim_ensemble* ensemble);
HSIM_API size_t hsim_ensemble_size(const hsim_ensemble* ensemble);
HSIM_API double hsim_ensemble_value(const hsim_ensemble* ensemble, size_t row,
                                    size_t species_index);
/* Copies one species' final values into out (capacity in elements). */
HSIM_API hsim_status hsim_ensemble_species_values(const hsim_ensemble* ensemble,
                                                  size_t species_index, double* out,
                                                  size_t capacity);
HSIM_API double hsim_ensemble_wall_time(const hsim_ensemble* ensemble);
HSIM_API hsim_status hsim_ensemble_write_csv(const hsim_ensemble* ensemble,
                                             const char* path);
HSIM_API char* hsim_ensemble_stats_json(const hsim_ensemble* ensemble);
HSIM_API char* hsim_ensemble_diagnostics_json(const hsim_ensemble* ensemble);

/* ---- analysis ----------------------------------------------------------- */

/* Two-sample Kolmogorov-Smirnov test: D statistic and asymptotic p-value. */
HSIM_API hsim_status hsim_ks_two_sample(const double* a, size_t na, const double* b,
                                        size_t nb, double* d_out, double* p_out);

/* Histogram of samples into `bins` equal-width bins, written as CSV. */
HSIM_API hsim_status hsim_histogram_csv(const double* samples, size_t n, size_t bins,
                                        const char* path);

/* ---- studies ------------------------------------------------------------ */

/* Coupled self-convergence study over a dyadic h list (finest entry is the
 * reference). drift_only zeroes the Wiener increments for the deterministic
 * control experiment. */
HSIM_API hsim_status hsim_convergence_run(const hsim_network* net,
                                          const hsim_partition* partition,
                                          const hsim_run_options* options,
                                          const double* h_list, size_t h_count,
                                          int drift_only, hsim_convergence** out);
HSIM_API void hsim_convergence_free(hsim_convergence* convergence);
HSIM_API size_t hsim_convergence_row_count(const hsim_convergence* convergence);
HSIM_API void hsim_convergence_row(const hsim_convergence* convergence, size_t index,
                                   double* h, double* mse, uint64_t* n);
HSIM_API double hsim_convergence_slope(const hsim_convergence* convergence);
HSIM_API int hsim_convergence_monotone_warning(const hsim_convergence* convergence);
HSIM_API hsim_status hsim_convergence_write_csv(const hsim_convergence* convergence,
                                                const char* path);

/* Wall-time ratio exact/hybrid per step size; the exact batch is timed once. */
HSIM_API hsim_status hsim_benchmark_run(const hsim_network* net,
                                        const hsim_partition* partition,
                                        const hsim_run_options* options,
                                        const double* h_list, size_t h_count,
                                        hsim_benchmark** out);
HSIM_API void hsim_benchmark_free(hsim_benchmark* benchmark);
HSIM_API size_t hsim_benchmark_row_count(const hsim_benchmark* benchmark);
HSIM_API void hsim_benchmark_row(const hsim_benchmark* benchmark, size_t index,
                                 double* h, double* t_ssa, double* t_hybrid,
                                 double* ratio);
HSIM_API hsim_status hsim_benchmark_write_csv(const hsim_benchmark* benchmark,
                                              const char* path);

#ifdef __cplusplus
}
#endif

#endif /* HYBRIDSIM_H */
