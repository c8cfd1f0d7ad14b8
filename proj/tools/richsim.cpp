// Command-line front end for the rich edge-prefetching simulator. Talks to
// the core library exclusively through the C API in rich.h.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rich.h"

namespace {

namespace fs = std::filesystem;

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> overrides;  // key=value
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool verbose = false;
};

int exit_code(rich_status status) { return static_cast<int>(status); }

int report_failure(rich_status status, const char* doing) {
    std::fprintf(stderr, "error while %s: %s\n", doing, rich_last_error());
    return exit_code(status);
}

using ConfigPtr = std::unique_ptr<rich_config, decltype(&rich_config_free)>;
using TracePtr = std::unique_ptr<rich_trace, decltype(&rich_trace_free)>;

// Builds the effective config: file (if given) + --set overrides + --seed.
int make_config(const GlobalOpts& g, ConfigPtr& out) {
    rich_config* cfg = nullptr;
    rich_status rc = g.config_path.empty() ? rich_config_default(&cfg)
                                           : rich_config_load(g.config_path.c_str(), &cfg);
    if (rc != RICH_OK) return report_failure(rc, "loading config");
    out = ConfigPtr(cfg, rich_config_free);
    for (const auto& kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            return exit_code(RICH_ERR_USAGE);
        }
        rc = rich_config_set(out.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (rc != RICH_OK) return report_failure(rc, "applying --set override");
    }
    if (g.seed_set) {
        rc = rich_config_set(out.get(), "seed", std::to_string(g.seed).c_str());
        if (rc != RICH_OK) return report_failure(rc, "applying --seed");
    }
    return 0;
}

int load_trace(const std::string& trace_path, const std::string& positions_path,
               const std::string& layout_path, TracePtr& out) {
    rich_trace* trace = nullptr;
    rich_status rc;
    if (!trace_path.empty()) {
        rc = rich_trace_load(trace_path.c_str(), &trace);
    } else if (!positions_path.empty() && !layout_path.empty()) {
        rc = rich_trace_from_positions(positions_path.c_str(), layout_path.c_str(), &trace);
    } else {
        std::fprintf(stderr, "error: need --trace, or --positions together with --layout\n");
        return exit_code(RICH_ERR_USAGE);
    }
    if (rc != RICH_OK) return report_failure(rc, "loading trace");
    out = TracePtr(trace, rich_trace_free);
    return 0;
}

int ensure_out_dir(const GlobalOpts& g) {
    std::error_code ec;
    fs::create_directories(g.out_dir, ec);
    if (ec) {
        std::fprintf(stderr, "error: cannot create output directory '%s': %s\n",
                     g.out_dir.c_str(), ec.message().c_str());
        return exit_code(RICH_ERR_DATA);
    }
    return 0;
}

std::string joined(const GlobalOpts& g, const char* name) {
    return (fs::path(g.out_dir) / name).string();
}

int cmd_analyze(const GlobalOpts& g, const std::string& trace_path,
                const std::string& positions_path, const std::string& layout_path) {
    ConfigPtr cfg(nullptr, rich_config_free);
    if (int rc = make_config(g, cfg)) return rc;
    TracePtr trace(nullptr, rich_trace_free);
    if (int rc = load_trace(trace_path, positions_path, layout_path, trace)) return rc;
    if (int rc = ensure_out_dir(g)) return rc;

    rich_stats* stats = nullptr;
    if (auto rc = rich_analyze(cfg.get(), trace.get(), &stats); rc != RICH_OK)
        return report_failure(rc, "analyzing trace");
    std::unique_ptr<rich_stats, decltype(&rich_stats_free)> holder(stats, rich_stats_free);

    if (auto rc = rich_stats_write_csv(stats, joined(g, "dwell_stats.csv").c_str(),
                                       joined(g, "significant_paths.csv").c_str());
        rc != RICH_OK)
        return report_failure(rc, "writing analysis CSVs");
    if (auto rc = rich_stats_write_json(stats, joined(g, "trace_stats.json").c_str());
        rc != RICH_OK)
        return report_failure(rc, "writing analysis JSON");

    size_t n_ens = 0, n_paths = 0;
    rich_stats_en_count(stats, &n_ens);
    rich_stats_path_count(stats, &n_paths);
    std::printf("analyzed %zu ENs, %zu significant paths -> %s\n", n_ens, n_paths,
                g.out_dir.c_str());
    return 0;
}

int cmd_generate(const GlobalOpts& g, const std::string& out_file) {
    ConfigPtr cfg(nullptr, rich_config_free);
    if (int rc = make_config(g, cfg)) return rc;
    if (int rc = ensure_out_dir(g)) return rc;

    rich_trace* trace = nullptr;
    const std::uint64_t seed = g.seed_set ? g.seed : 1;
    if (auto rc = rich_trace_generate(cfg.get(), seed, &trace); rc != RICH_OK)
        return report_failure(rc, "generating trace");
    TracePtr holder(trace, rich_trace_free);

    const std::string path =
        out_file.empty() ? joined(g, "trace.csv") : (fs::path(g.out_dir) / out_file).string();
    if (auto rc = rich_trace_save(trace, path.c_str()); rc != RICH_OK)
        return report_failure(rc, "writing trace");
    size_t cars = 0, events = 0;
    rich_trace_car_count(trace, &cars);
    rich_trace_event_count(trace, &events);
    std::printf("generated %zu cars (%zu coverage events) -> %s\n", cars, events, path.c_str());
    return 0;
}

int cmd_plan(const GlobalOpts& g, const std::string& trace_path,
             const std::string& positions_path, const std::string& layout_path) {
    ConfigPtr cfg(nullptr, rich_config_free);
    if (int rc = make_config(g, cfg)) return rc;
    TracePtr trace(nullptr, rich_trace_free);
    if (int rc = load_trace(trace_path, positions_path, layout_path, trace)) return rc;
    if (int rc = ensure_out_dir(g)) return rc;

    rich_phi* phi = nullptr;
    rich_plan* plan = nullptr;
    if (auto rc = rich_plan_compute(cfg.get(), trace.get(), &phi, &plan); rc != RICH_OK)
        return report_failure(rc, "computing plan");
    std::unique_ptr<rich_phi, decltype(&rich_phi_free)> phi_holder(phi, rich_phi_free);
    std::unique_ptr<rich_plan, decltype(&rich_plan_free)> plan_holder(plan, rich_plan_free);

    if (auto rc = rich_phi_write_json(phi, joined(g, "phi.json").c_str()); rc != RICH_OK)
        return report_failure(rc, "writing phi dump");
    if (auto rc = rich_plan_write_json(plan, joined(g, "plan.json").c_str()); rc != RICH_OK)
        return report_failure(rc, "writing plan dump");
    int n_ens = 0, n_chunks = 0;
    rich_phi_dims(phi, &n_ens, &n_chunks);
    std::printf("planned %d ENs x %d chunks -> %s\n", n_ens, n_chunks, g.out_dir.c_str());
    return 0;
}

int cmd_simulate(const GlobalOpts& g, const std::string& trace_path,
                 const std::string& positions_path, const std::string& layout_path) {
    ConfigPtr cfg(nullptr, rich_config_free);
    if (int rc = make_config(g, cfg)) return rc;
    TracePtr trace(nullptr, rich_trace_free);
    if (int rc = load_trace(trace_path, positions_path, layout_path, trace)) return rc;
    if (int rc = ensure_out_dir(g)) return rc;

    if (auto rc = rich_simulate_sweep(cfg.get(), trace.get(), g.out_dir.c_str()); rc != RICH_OK)
        return report_failure(rc, "running simulation sweep");
    std::printf("wrote %s and %s\n", joined(g, "metrics.csv").c_str(),
                joined(g, "metrics.json").c_str());
    return 0;
}

int cmd_optimize(const GlobalOpts& g, const std::string& trace_path,
                 const std::string& positions_path, const std::string& layout_path,
                 std::vector<double> grid) {
    ConfigPtr cfg(nullptr, rich_config_free);
    if (int rc = make_config(g, cfg)) return rc;
    TracePtr trace(nullptr, rich_trace_free);
    if (int rc = load_trace(trace_path, positions_path, layout_path, trace)) return rc;
    if (int rc = ensure_out_dir(g)) return rc;

    std::vector<double> best(16, 0.0);
    size_t n_taus = 0;
    double objective = 0.0;
    if (auto rc = rich_optimize_thresholds(cfg.get(), trace.get(), grid.data(), grid.size(),
                                           joined(g, "threshold_surface.csv").c_str(),
                                           best.data(), best.size(), &n_taus, &objective);
        rc != RICH_OK)
        return report_failure(rc, "optimizing thresholds");

    // persist the winning profile
    const std::string profile_path = joined(g, "best_thresholds.json");
    std::FILE* f = std::fopen(profile_path.c_str(), "wb");
    if (!f) {
        std::fprintf(stderr, "error: cannot write '%s'\n", profile_path.c_str());
        return exit_code(RICH_ERR_DATA);
    }
    std::fprintf(f, "{\n  \"taus\": [");
    for (size_t i = 0; i < n_taus; ++i) std::fprintf(f, "%s%.12g", i ? ", " : "", best[i]);
    std::fprintf(f, "],\n  \"objective\": %.12g\n}\n", objective);
    std::fclose(f);
    std::printf("best objective %.6g -> %s\n", objective, profile_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Edge-cache prefetching simulator and policy toolkit"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON experiment config file");
    app.add_option("--out-dir", g.out_dir, "output directory (default: .)");
    app.add_option("--set", g.overrides, "config override key=value (repeatable)");
    auto* seed_opt = app.add_option("--seed", g.seed, "RNG seed override");
    app.add_flag("--verbose", g.verbose, "log one line per simulation event to stderr");

    std::string trace_path, positions_path, layout_path, out_file;
    std::vector<double> grid;

    auto add_trace_opts = [&](CLI::App* cmd) {
        cmd->add_option("--trace", trace_path, "coverage-event CSV");
        cmd->add_option("--positions", positions_path, "position-sample CSV");
        cmd->add_option("--layout", layout_path, "EN layout CSV");
    };

    auto* analyze = app.add_subcommand("analyze-trace", "per-EN dwell stats + significant paths");
    add_trace_opts(analyze);
    auto* plan = app.add_subcommand("plan", "compute download probabilities and a prefetch plan");
    add_trace_opts(plan);
    auto* simulate = app.add_subcommand("simulate", "run the policy sweep and emit metrics");
    add_trace_opts(simulate);
    auto* optimize = app.add_subcommand("optimize-thresholds", "exhaustive threshold grid search");
    add_trace_opts(optimize);
    optimize->add_option("--grid", grid, "candidate threshold values");
    auto* generate = app.add_subcommand("generate-trace", "synthesize a coverage trace");
    generate->add_option("--out-file", out_file, "trace file name (default trace.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : exit_code(RICH_ERR_USAGE);
    }
    g.seed_set = seed_opt->count() > 0;
    if (g.verbose) g.overrides.push_back("verbose=true");

    if (analyze->parsed()) return cmd_analyze(g, trace_path, positions_path, layout_path);
    if (plan->parsed()) return cmd_plan(g, trace_path, positions_path, layout_path);
    if (simulate->parsed()) return cmd_simulate(g, trace_path, positions_path, layout_path);
    if (optimize->parsed()) {
        if (grid.empty()) {
            std::fprintf(stderr, "error: --grid needs at least one threshold\n");
            return exit_code(RICH_ERR_USAGE);
        }
        return cmd_optimize(g, trace_path, positions_path, layout_path, grid);
    }
    if (generate->parsed()) return cmd_generate(g, out_file);
    return exit_code(RICH_ERR_USAGE);
}
