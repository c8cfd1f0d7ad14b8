/* C API for the rich edge-prefetching simulator.
 *
 * All functions return rich_status; every other result travels through an
 * out-parameter or an opaque handle. On failure the thread-local message
 * from rich_last_error() describes what went wrong. Handles are freed with
 * their matching *_free function; freeing NULL is a no-op.
 */
#ifndef RICH_H
#define RICH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rich_status {
    RICH_OK = 0,
    RICH_ERR_USAGE = 1,
    RICH_ERR_DATA = 2,
    RICH_ERR_INTERNAL = 3
} rich_status;

typedef struct rich_trace rich_trace;    /* list of per-car coverage paths */
typedef struct rich_config rich_config;  /* experiment configuration tree */
typedef struct rich_stats rich_stats;    /* per-EN dwell stats + significant paths */
typedef struct rich_phi rich_phi;        /* per-(EN, chunk) download probabilities */
typedef struct rich_plan rich_plan;      /* prefetch plan over one EN sequence */
typedef struct rich_report rich_report;  /* metrics of one simulation run */

const char* rich_version(void);
/* Message for the most recent failure on this thread; never NULL. */
const char* rich_last_error(void);

/* ---- traces ---- */
rich_status rich_trace_load(const char* coverage_csv_path, rich_trace** out);
rich_status rich_trace_from_positions(const char* positions_csv_path,
                                      const char* layout_csv_path, rich_trace** out);
/* Synthetic trace from the config's "synthetic" section. */
rich_status rich_trace_generate(const rich_config* config, uint64_t seed, rich_trace** out);
rich_status rich_trace_save(const rich_trace* trace, const char* coverage_csv_path);
rich_status rich_trace_car_count(const rich_trace* trace, size_t* out);
rich_status rich_trace_event_count(const rich_trace* trace, size_t* out);
void rich_trace_free(rich_trace* trace);

/* ---- configuration ---- */
rich_status rich_config_default(rich_config** out);
rich_status rich_config_load(const char* json_path, rich_config** out);
rich_status rich_config_parse(const char* json_text, rich_config** out);
/* Dotted-key override, e.g. ("cache.capacity_chunks", "260"). */
rich_status rich_config_set(rich_config* config, const char* key, const char* value);
void rich_config_free(rich_config* config);

/* ---- trace analysis ---- */
rich_status rich_analyze(const rich_config* config, const rich_trace* trace, rich_stats** out);
rich_status rich_stats_en_count(const rich_stats* stats, size_t* out);
rich_status rich_stats_path_count(const rich_stats* stats, size_t* out);
/* field: "mean_dwell_s", "skewness", "kurtosis", "avg_concurrent_users",
 * "samples", "fast_count", "slow_count" */
rich_status rich_stats_en_value(const rich_stats* stats, const char* en_id, const char* field,
                                double* out);
rich_status rich_stats_write_csv(const rich_stats* stats, const char* dwell_csv_path,
                                 const char* paths_csv_path);
rich_status rich_stats_write_json(const rich_stats* stats, const char* json_path);
void rich_stats_free(rich_stats* stats);

/* ---- download-probability model + plan (over config plan.path) ---- */
rich_status rich_plan_compute(const rich_config* config, const rich_trace* trace, rich_phi** phi,
                              rich_plan** plan);
rich_status rich_phi_dims(const rich_phi* phi, int* n_ens, int* n_chunks);
rich_status rich_phi_value(const rich_phi* phi, int en_index, int chunk, double* out);
rich_status rich_phi_write_json(const rich_phi* phi, const char* json_path);
void rich_phi_free(rich_phi* phi);
rich_status rich_plan_copies(const rich_plan* plan, int chunk, int* out);
rich_status rich_plan_achieved_prob(const rich_plan* plan, int chunk, double* out);
rich_status rich_plan_write_json(const rich_plan* plan, const char* json_path);
void rich_plan_free(rich_plan* plan);

/* ---- simulation ---- */
/* One run with the config's own policy/cache/seed. */
rich_status rich_simulate_single(const rich_config* config, const rich_trace* trace,
                                 rich_report** out);
/* Full sweep (policies x cache sizes x seeds); writes metrics.csv and
 * metrics.json under out_dir. */
rich_status rich_simulate_sweep(const rich_config* config, const rich_trace* trace,
                                const char* out_dir);
/* field: CSV column names (hit_prob, cache_throughput_bps, backhaul_bps,
 * overhead, occupancy, utility, c_hat) plus hits, misses, covered_time_s,
 * delivered_bits, prefetch_bits, recovery_bits, plans_computed. */
rich_status rich_report_value(const rich_report* report, const char* field, double* out);
rich_status rich_report_write_json(const rich_report* report, const char* json_path);
void rich_report_free(rich_report* report);

/* ---- threshold optimization ---- */
/* Exhaustive grid over one threshold per plan position; best_taus must hold
 * config policy.plan_horizon entries (count reported via n_taus). Writes the
 * full objective surface to surface_csv_path when non-NULL. */
rich_status rich_optimize_thresholds(const rich_config* config, const rich_trace* trace,
                                     const double* grid, size_t grid_len,
                                     const char* surface_csv_path, double* best_taus,
                                     size_t best_taus_len, size_t* n_taus,
                                     double* best_objective);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RICH_H */
