#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rich/metrics.hpp"
#include "rich/policy.hpp"
#include "rich/simulation.hpp"
#include "rich/synthetic.hpp"
#include "rich/trace.hpp"

namespace rich {

// Full declarative experiment description, loadable from one JSON file so
// every result is reproducible from a single artifact. CLI flags override
// individual keys (see apply_override).
struct ExperimentConfig {
    SimulationConfig sim;

    // model source: per-EN dwell statistics for the Prefetcher
    // "trace" = empirical from the simulated trace, "spec" = explicit mixtures
    std::string model_source = "trace";
    std::map<std::string, std::vector<std::pair<double, double>>> model_dwell;  // (s, prob)
    std::map<std::string, double> model_users;
    double fast_slow_boundary_s = 10.0;

    // trace filtering before simulation
    bool significant_only = true;
    int path_len = 3;
    long min_cars = 45;

    // sweep axes for `simulate`
    std::vector<std::string> sweep_policies = {"rich", "netpredict", "pop"};
    std::vector<long long> sweep_cache_chunks;  // empty = just sim.cache_capacity_chunks
    std::vector<std::uint64_t> sweep_seeds;     // empty = just sim.seed

    // threshold optimizer
    std::vector<double> optimize_grid = {0.2, 0.5, 0.8};
    std::string optimize_objective = "hit_probability";

    // synthetic trace generation
    std::optional<SyntheticTraceSpec> synthetic;

    // plan subcommand: the EN sequence to plan over
    std::vector<std::string> plan_path;

    bool verbose = false;
};

ExperimentConfig default_config();
ExperimentConfig load_config_file(const std::string& path);
ExperimentConfig parse_config_json(const std::string& json_text);
// Dotted-key override, e.g. "policy.kind=pop", "cache.capacity_chunks=260".
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Filter + model-building pipeline shared by simulate/optimize.
std::vector<CarPath> filter_trace(const ExperimentConfig& cfg, std::span<const CarPath> trace);
PrefetchModel build_model(const ExperimentConfig& cfg, std::span<const CarPath> trace);

// One row per (policy, cache size, seed), ordered by the sweep axes.
std::vector<MetricsReport> run_sweep(const ExperimentConfig& cfg, std::span<const CarPath> trace);
MetricsReport run_single(const ExperimentConfig& cfg, std::span<const CarPath> trace);

void write_reports_csv(std::span<const MetricsReport> reports, const std::string& path);
void write_reports_json(std::span<const MetricsReport> reports, const std::string& path);

struct OptimizeOutcome {
    std::vector<double> best_taus;
    double best_objective = 0.0;
    struct SurfacePoint {
        std::vector<double> taus;
        double objective = 0.0;
    };
    std::vector<SurfacePoint> surface;  // full grid, lexicographic order
};

// Exhaustive grid search over one threshold per plan position; the best
// profile wins, ties broken toward the lexicographically smallest.
OptimizeOutcome optimize_thresholds(const ExperimentConfig& cfg, std::span<const CarPath> trace,
                                    std::span<const double> grid, const std::string& objective);

double report_objective(const MetricsReport& r, const std::string& objective);

// analyze-trace outputs
struct AnalyzeOutcome {
    std::vector<DwellStats> per_en;
    std::vector<SignificantPath> paths;
};
AnalyzeOutcome analyze_trace(const ExperimentConfig& cfg, std::span<const CarPath> trace);
void write_analyze_csv(const AnalyzeOutcome& a, const std::string& dwell_csv_path,
                       const std::string& paths_csv_path);
void write_analyze_json(const AnalyzeOutcome& a, const std::string& json_path);

// plan artifacts: the phi matrix and prefetch plan for cfg.plan_path
struct PlanOutcome {
    PhiMatrix phi;
    PrefetchPlan plan;
};
PlanOutcome compute_plan(const ExperimentConfig& cfg, std::span<const CarPath> trace);

}  // namespace rich
