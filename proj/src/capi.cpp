#include "rich.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "rich/errors.hpp"
#include "rich/experiment.hpp"
#include "rich/probmodel.hpp"

namespace {

thread_local std::string g_last_error = "no error";

rich_status fail(rich_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

rich_status from_kind(rich::ErrorKind kind) {
    switch (kind) {
        case rich::ErrorKind::usage: return RICH_ERR_USAGE;
        case rich::ErrorKind::data: return RICH_ERR_DATA;
        case rich::ErrorKind::internal: return RICH_ERR_INTERNAL;
    }
    return RICH_ERR_INTERNAL;
}

// Every API body runs under this wrapper so exceptions become status codes.
template <typename Fn>
rich_status guarded(Fn&& fn) {
    try {
        fn();
        return RICH_OK;
    } catch (const rich::Error& e) {
        return fail(from_kind(e.kind()), e.what());
    } catch (const std::exception& e) {
        return fail(RICH_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(RICH_ERR_INTERNAL, "unknown error");
    }
}

rich_status require(bool ok, const char* what) {
    return ok ? RICH_OK : fail(RICH_ERR_USAGE, what);
}

}  // namespace

struct rich_trace {
    std::vector<rich::CarPath> paths;
};
struct rich_config {
    rich::ExperimentConfig cfg;
};
struct rich_stats {
    rich::AnalyzeOutcome outcome;
};
struct rich_phi {
    rich::PhiMatrix phi;
};
struct rich_plan {
    rich::PrefetchPlan plan;
};
struct rich_report {
    rich::MetricsReport report;
};

extern "C" {

const char* rich_version(void) { return "1.0.0"; }

const char* rich_last_error(void) { return g_last_error.c_str(); }

/* ---- traces ---- */

rich_status rich_trace_load(const char* path, rich_trace** out) {
    if (auto rc = require(path && out, "null argument")) return rc;
    return guarded([&] {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw rich::DataError(std::string("cannot open '") + path + "'");
        auto events = rich::load_coverage_events(in);
        *out = new rich_trace{rich::group_into_paths(events)};
    });
}

rich_status rich_trace_from_positions(const char* positions_path, const char* layout_path,
                                      rich_trace** out) {
    if (auto rc = require(positions_path && layout_path && out, "null argument")) return rc;
    return guarded([&] {
        std::ifstream pin(positions_path, std::ios::binary);
        if (!pin) throw rich::DataError(std::string("cannot open '") + positions_path + "'");
        std::ifstream lin(layout_path, std::ios::binary);
        if (!lin) throw rich::DataError(std::string("cannot open '") + layout_path + "'");
        const auto samples = rich::load_position_samples(pin);
        const auto layout = rich::load_en_layout(lin);
        auto events = rich::derive_coverage_from_positions(samples, layout);
        *out = new rich_trace{rich::group_into_paths(events)};
    });
}

rich_status rich_trace_generate(const rich_config* config, uint64_t seed, rich_trace** out) {
    if (auto rc = require(config && out, "null argument")) return rc;
    return guarded([&] {
        if (!config->cfg.synthetic)
            throw rich::UsageError("config has no 'synthetic' section to generate from");
        *out = new rich_trace{rich::generate_synthetic_trace(*config->cfg.synthetic, seed)};
    });
}

rich_status rich_trace_save(const rich_trace* trace, const char* path) {
    if (auto rc = require(trace && path, "null argument")) return rc;
    return guarded([&] {
        std::ofstream outf(path, std::ios::binary);
        if (!outf) throw rich::DataError(std::string("cannot write '") + path + "'");
        rich::write_coverage_events(rich::flatten_paths(trace->paths), outf);
    });
}

rich_status rich_trace_car_count(const rich_trace* trace, size_t* out) {
    if (auto rc = require(trace && out, "null argument")) return rc;
    *out = trace->paths.size();
    return RICH_OK;
}

rich_status rich_trace_event_count(const rich_trace* trace, size_t* out) {
    if (auto rc = require(trace && out, "null argument")) return rc;
    size_t n = 0;
    for (const auto& p : trace->paths) n += p.events.size();
    *out = n;
    return RICH_OK;
}

void rich_trace_free(rich_trace* trace) { delete trace; }

/* ---- configuration ---- */

rich_status rich_config_default(rich_config** out) {
    if (auto rc = require(out != nullptr, "null argument")) return rc;
    return guarded([&] { *out = new rich_config{rich::default_config()}; });
}

rich_status rich_config_load(const char* path, rich_config** out) {
    if (auto rc = require(path && out, "null argument")) return rc;
    return guarded([&] { *out = new rich_config{rich::load_config_file(path)}; });
}

rich_status rich_config_parse(const char* json_text, rich_config** out) {
    if (auto rc = require(json_text && out, "null argument")) return rc;
    return guarded([&] { *out = new rich_config{rich::parse_config_json(json_text)}; });
}

rich_status rich_config_set(rich_config* config, const char* key, const char* value) {
    if (auto rc = require(config && key && value, "null argument")) return rc;
    return guarded([&] { rich::apply_override(config->cfg, key, value); });
}

void rich_config_free(rich_config* config) { delete config; }

/* ---- analysis ---- */

rich_status rich_analyze(const rich_config* config, const rich_trace* trace, rich_stats** out) {
    if (auto rc = require(config && trace && out, "null argument")) return rc;
    return guarded([&] {
        *out = new rich_stats{rich::analyze_trace(config->cfg, trace->paths)};
    });
}

rich_status rich_stats_en_count(const rich_stats* stats, size_t* out) {
    if (auto rc = require(stats && out, "null argument")) return rc;
    *out = stats->outcome.per_en.size();
    return RICH_OK;
}

rich_status rich_stats_path_count(const rich_stats* stats, size_t* out) {
    if (auto rc = require(stats && out, "null argument")) return rc;
    *out = stats->outcome.paths.size();
    return RICH_OK;
}

rich_status rich_stats_en_value(const rich_stats* stats, const char* en_id, const char* field,
                                double* out) {
    if (auto rc = require(stats && en_id && field && out, "null argument")) return rc;
    return guarded([&] {
        for (const auto& st : stats->outcome.per_en) {
            if (st.en_id != en_id) continue;
            const std::string f = field;
            if (f == "mean_dwell_s") *out = st.mean_dwell_s;
            else if (f == "skewness") *out = st.skewness;
            else if (f == "kurtosis") *out = st.kurtosis;
            else if (f == "avg_concurrent_users") *out = st.avg_concurrent_users;
            else if (f == "samples") *out = static_cast<double>(st.sample_count);
            else if (f == "fast_count") *out = static_cast<double>(st.fast_count);
            else if (f == "slow_count") *out = static_cast<double>(st.slow_count);
            else throw rich::UsageError("unknown stats field '" + f + "'");
            return;
        }
        throw rich::DataError(std::string("no stats for EN '") + en_id + "'");
    });
}

rich_status rich_stats_write_csv(const rich_stats* stats, const char* dwell_csv_path,
                                 const char* paths_csv_path) {
    if (auto rc = require(stats && dwell_csv_path && paths_csv_path, "null argument")) return rc;
    return guarded([&] { rich::write_analyze_csv(stats->outcome, dwell_csv_path, paths_csv_path); });
}

rich_status rich_stats_write_json(const rich_stats* stats, const char* json_path) {
    if (auto rc = require(stats && json_path, "null argument")) return rc;
    return guarded([&] { rich::write_analyze_json(stats->outcome, json_path); });
}

void rich_stats_free(rich_stats* stats) { delete stats; }

/* ---- phi + plan ---- */

rich_status rich_plan_compute(const rich_config* config, const rich_trace* trace, rich_phi** phi,
                              rich_plan** plan) {
    if (auto rc = require(config && trace && phi && plan, "null argument")) return rc;
    return guarded([&] {
        auto outcome = rich::compute_plan(config->cfg, trace->paths);
        *phi = new rich_phi{std::move(outcome.phi)};
        *plan = new rich_plan{std::move(outcome.plan)};
    });
}

rich_status rich_phi_dims(const rich_phi* phi, int* n_ens, int* n_chunks) {
    if (auto rc = require(phi && n_ens && n_chunks, "null argument")) return rc;
    *n_ens = phi->phi.n_ens;
    *n_chunks = phi->phi.n_chunks;
    return RICH_OK;
}

rich_status rich_phi_value(const rich_phi* phi, int en_index, int chunk, double* out) {
    if (auto rc = require(phi && out, "null argument")) return rc;
    if (en_index < 0 || en_index >= phi->phi.n_ens || chunk < 1 || chunk > phi->phi.n_chunks)
        return fail(RICH_ERR_USAGE, "phi index out of range");
    *out = phi->phi.at(en_index, chunk);
    return RICH_OK;
}

rich_status rich_phi_write_json(const rich_phi* phi, const char* json_path) {
    if (auto rc = require(phi && json_path, "null argument")) return rc;
    return guarded([&] {
        std::ofstream out(json_path, std::ios::binary);
        if (!out) throw rich::DataError(std::string("cannot write '") + json_path + "'");
        out << rich::phi_to_json(phi->phi) << "\n";
    });
}

void rich_phi_free(rich_phi* phi) { delete phi; }

rich_status rich_plan_copies(const rich_plan* plan, int chunk, int* out) {
    if (auto rc = require(plan && out, "null argument")) return rc;
    if (chunk < 1 || chunk > plan->plan.n_chunks) return fail(RICH_ERR_USAGE, "chunk out of range");
    *out = static_cast<int>(plan->plan.ens_for(chunk).size());
    return RICH_OK;
}

rich_status rich_plan_achieved_prob(const rich_plan* plan, int chunk, double* out) {
    if (auto rc = require(plan && out, "null argument")) return rc;
    if (chunk < 1 || chunk > plan->plan.n_chunks) return fail(RICH_ERR_USAGE, "chunk out of range");
    *out = plan->plan.prob_for(chunk);
    return RICH_OK;
}

rich_status rich_plan_write_json(const rich_plan* plan, const char* json_path) {
    if (auto rc = require(plan && json_path, "null argument")) return rc;
    return guarded([&] {
        std::ofstream out(json_path, std::ios::binary);
        if (!out) throw rich::DataError(std::string("cannot write '") + json_path + "'");
        out << rich::plan_to_json(plan->plan) << "\n";
    });
}

void rich_plan_free(rich_plan* plan) { delete plan; }

/* ---- simulation ---- */

rich_status rich_simulate_single(const rich_config* config, const rich_trace* trace,
                                 rich_report** out) {
    if (auto rc = require(config && trace && out, "null argument")) return rc;
    return guarded([&] {
        *out = new rich_report{rich::run_single(config->cfg, trace->paths)};
    });
}

rich_status rich_simulate_sweep(const rich_config* config, const rich_trace* trace,
                                const char* out_dir) {
    if (auto rc = require(config && trace && out_dir, "null argument")) return rc;
    return guarded([&] {
        std::filesystem::create_directories(out_dir);
        const auto rows = rich::run_sweep(config->cfg, trace->paths);
        const auto dir = std::filesystem::path(out_dir);
        rich::write_reports_csv(rows, (dir / "metrics.csv").string());
        rich::write_reports_json(rows, (dir / "metrics.json").string());
    });
}

rich_status rich_report_value(const rich_report* report, const char* field, double* out) {
    if (auto rc = require(report && field && out, "null argument")) return rc;
    return guarded([&] {
        const auto& r = report->report;
        const std::string f = field;
        if (f == "hit_prob") *out = r.hit_probability;
        else if (f == "cache_throughput_bps") *out = r.cache_throughput_bps;
        else if (f == "backhaul_bps") *out = r.backhaul_traffic_bps;
        else if (f == "overhead") {
            if (!r.overhead) throw rich::DataError("overhead is undefined (nothing delivered)");
            *out = *r.overhead;
        } else if (f == "occupancy") *out = r.network_cache_occupancy;
        else if (f == "utility") *out = r.joint_utility;
        else if (f == "c_hat") *out = r.c_hat;
        else if (f == "hits") *out = static_cast<double>(r.hits);
        else if (f == "misses") *out = static_cast<double>(r.misses);
        else if (f == "covered_time_s") *out = r.covered_time_s;
        else if (f == "delivered_bits") *out = static_cast<double>(r.delivered_bits);
        else if (f == "prefetch_bits") *out = static_cast<double>(r.prefetch_bits);
        else if (f == "recovery_bits") *out = static_cast<double>(r.recovery_bits);
        else if (f == "plans_computed") *out = static_cast<double>(r.plans_computed);
        else throw rich::UsageError("unknown report field '" + f + "'");
    });
}

rich_status rich_report_write_json(const rich_report* report, const char* json_path) {
    if (auto rc = require(report && json_path, "null argument")) return rc;
    return guarded([&] {
        std::ofstream out(json_path, std::ios::binary);
        if (!out) throw rich::DataError(std::string("cannot write '") + json_path + "'");
        out << rich::metrics_to_json(report->report) << "\n";
    });
}

void rich_report_free(rich_report* report) { delete report; }

/* ---- optimizer ---- */

rich_status rich_optimize_thresholds(const rich_config* config, const rich_trace* trace,
                                     const double* grid, size_t grid_len,
                                     const char* surface_csv_path, double* best_taus,
                                     size_t best_taus_len, size_t* n_taus,
                                     double* best_objective) {
    if (auto rc = require(config && trace && grid && best_taus && n_taus && best_objective,
                          "null argument"))
        return rc;
    return guarded([&] {
        const auto& cfg = config->cfg;
        if (best_taus_len < static_cast<size_t>(cfg.sim.plan_horizon))
            throw rich::UsageError("best_taus buffer smaller than the plan horizon");
        const auto outcome = rich::optimize_thresholds(
            cfg, trace->paths, std::span<const double>(grid, grid_len), cfg.optimize_objective);
        for (size_t i = 0; i < outcome.best_taus.size(); ++i) best_taus[i] = outcome.best_taus[i];
        *n_taus = outcome.best_taus.size();
        *best_objective = outcome.best_objective;
        if (surface_csv_path) {
            std::ofstream out(surface_csv_path, std::ios::binary);
            if (!out)
                throw rich::DataError(std::string("cannot write '") + surface_csv_path + "'");
            for (int d = 0; d < cfg.sim.plan_horizon; ++d) out << "tau" << (d + 1) << ",";
            out << "objective\n";
            char buf[48];
            for (const auto& point : outcome.surface) {
                for (double t : point.taus) {
                    std::snprintf(buf, sizeof(buf), "%.12g,", t);
                    out << buf;
                }
                std::snprintf(buf, sizeof(buf), "%.12g\n", point.objective);
                out << buf;
            }
        }
    });
}

} /* extern "C" */
