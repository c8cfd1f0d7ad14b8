#include "rich/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rich/errors.hpp"
#include "rich/probmodel.hpp"

namespace rich {

using nlohmann::ordered_json;

ExperimentConfig default_config() { return ExperimentConfig{}; }

namespace {

template <typename T>
void read_if(const ordered_json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::map<std::string, std::vector<std::pair<double, double>>> parse_dwell_map(
    const ordered_json& j) {
    std::map<std::string, std::vector<std::pair<double, double>>> out;
    for (const auto& [en, arr] : j.items()) {
        std::vector<std::pair<double, double>> mixture;
        for (const auto& point : arr) {
            if (!point.is_array() || point.size() != 2)
                throw DataError("dwell mixture entries must be [seconds, prob] pairs");
            mixture.emplace_back(point[0].get<double>(), point[1].get<double>());
        }
        out.emplace(en, std::move(mixture));
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw DataError(std::string("config parse error: ") + e.what());
    }

    ExperimentConfig cfg;
    auto& sim = cfg.sim;
    if (j.contains("radio")) {
        const auto& r = j["radio"];
        read_if(r, "bandwidth_bps", sim.radio_bandwidth_bps);
        read_if(r, "chunk_size_bits", sim.catalog.chunk_size_bits);
    }
    if (j.contains("backhaul")) {
        const auto& b = j["backhaul"];
        read_if(b, "datastore_rate_bps", sim.backhaul.datastore_rate_bps);
        read_if(b, "datastore_delay_s", sim.backhaul.datastore_delay_s);
        read_if(b, "prefetcher_delay_s", sim.backhaul.prefetcher_delay_s);
    }
    if (j.contains("catalog")) {
        const auto& c = j["catalog"];
        read_if(c, "n_contents", sim.catalog.n_contents);
        read_if(c, "chunks_per_content", sim.catalog.chunks_per_content);
        read_if(c, "chunk_size_bits", sim.catalog.chunk_size_bits);
    }
    if (j.contains("workload")) read_if(j["workload"], "zipf_alpha", sim.zipf_alpha);
    if (j.contains("policy")) {
        const auto& p = j["policy"];
        if (p.contains("kind")) sim.policy = policy_from_name(p["kind"].get<std::string>());
        read_if(p, "taus", sim.taus);
        read_if(p, "keep_partial_on_failure", sim.keep_partial_on_failure);
        read_if(p, "plan_horizon", sim.plan_horizon);
    }
    if (j.contains("cache")) {
        const auto& c = j["cache"];
        read_if(c, "capacity_chunks", sim.cache_capacity_chunks);
        read_if(c, "standard_enabled", sim.standard_cache_enabled);
    }
    if (j.contains("recovery")) read_if(j["recovery"], "margin_chunks", sim.recovery_margin);
    if (j.contains("errors")) {
        const auto& e = j["errors"];
        if (e.contains("dwell")) {
            DwellErrorSpec d;
            read_if(e["dwell"], "mu", d.mu);
            read_if(e["dwell"], "sigma", d.sigma);
            sim.dwell_error = d;
        }
        read_if(e, "path_skip_fraction", sim.path_skip_fraction);
    }
    if (j.contains("metrics")) {
        const auto& m = j["metrics"];
        read_if(m, "eval_positions", sim.eval_positions);
        read_if(m, "utility_a", sim.utility_a);
        read_if(m, "utility_b", sim.utility_b);
    }
    read_if(j, "seed", sim.seed);
    if (j.contains("model")) {
        const auto& m = j["model"];
        read_if(m, "source", cfg.model_source);
        read_if(m, "bin_width_s", sim.bin_width_s);
        read_if(m, "fast_slow_boundary_s", cfg.fast_slow_boundary_s);
        if (m.contains("spec_dwell")) cfg.model_dwell = parse_dwell_map(m["spec_dwell"]);
        if (m.contains("spec_users"))
            cfg.model_users = m["spec_users"].get<std::map<std::string, double>>();
    }
    if (j.contains("trace")) {
        const auto& t = j["trace"];
        read_if(t, "significant_only", cfg.significant_only);
        read_if(t, "path_len", cfg.path_len);
        read_if(t, "min_cars", cfg.min_cars);
    }
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        read_if(s, "policies", cfg.sweep_policies);
        read_if(s, "cache_chunks", cfg.sweep_cache_chunks);
        read_if(s, "seeds", cfg.sweep_seeds);
    }
    if (j.contains("optimize")) {
        const auto& o = j["optimize"];
        read_if(o, "grid", cfg.optimize_grid);
        read_if(o, "objective", cfg.optimize_objective);
    }
    if (j.contains("synthetic")) {
        const auto& s = j["synthetic"];
        SyntheticTraceSpec spec;
        if (s.contains("paths")) {
            for (const auto& p : s["paths"]) {
                SyntheticPathSpec ps;
                ps.ens = p.at("ens").get<std::vector<std::string>>();
                if (p.contains("weight")) ps.weight = p["weight"].get<double>();
                spec.paths.push_back(std::move(ps));
            }
        }
        if (s.contains("dwell")) {
            for (auto& [en, mixture] : parse_dwell_map(s["dwell"])) {
                spec.dwell.emplace(en, DwellMixture{mixture});
            }
        }
        if (s.contains("n_cars")) spec.n_cars = s["n_cars"].get<long>();
        read_if(s, "arrival_rate_hz", spec.arrival_rate_hz);
        read_if(s, "inter_en_gap_s", spec.inter_en_gap_s);
        cfg.synthetic = std::move(spec);
    }
    if (j.contains("plan")) read_if(j["plan"], "path", cfg.plan_path);
    read_if(j, "verbose", cfg.verbose);
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    auto& sim = cfg.sim;
    auto as_double = [&] {
        try {
            return std::stod(value);
        } catch (const std::exception&) {
            throw UsageError("override " + key + ": '" + value + "' is not a number");
        }
    };
    auto as_ll = [&] { return static_cast<long long>(std::llround(as_double())); };
    auto as_bool = [&] {
        if (value == "true" || value == "1") return true;
        if (value == "false" || value == "0") return false;
        throw UsageError("override " + key + ": expected true/false");
    };

    if (key == "radio.bandwidth_bps") sim.radio_bandwidth_bps = as_double();
    else if (key == "catalog.chunk_size_bits") sim.catalog.chunk_size_bits = as_double();
    else if (key == "catalog.n_contents") sim.catalog.n_contents = static_cast<int>(as_ll());
    else if (key == "catalog.chunks_per_content") sim.catalog.chunks_per_content = as_ll();
    else if (key == "backhaul.datastore_rate_bps") sim.backhaul.datastore_rate_bps = as_double();
    else if (key == "backhaul.datastore_delay_s") sim.backhaul.datastore_delay_s = as_double();
    else if (key == "backhaul.prefetcher_delay_s") sim.backhaul.prefetcher_delay_s = as_double();
    else if (key == "workload.zipf_alpha") sim.zipf_alpha = as_double();
    else if (key == "policy.kind") sim.policy = policy_from_name(value);
    else if (key == "policy.plan_horizon") sim.plan_horizon = static_cast<int>(as_ll());
    else if (key == "policy.keep_partial_on_failure") sim.keep_partial_on_failure = as_bool();
    else if (key == "cache.capacity_chunks") sim.cache_capacity_chunks = as_ll();
    else if (key == "cache.standard_enabled") sim.standard_cache_enabled = as_bool();
    else if (key == "recovery.margin_chunks") sim.recovery_margin = static_cast<int>(as_ll());
    else if (key == "errors.path_skip_fraction") sim.path_skip_fraction = as_double();
    else if (key == "errors.dwell.mu") {
        if (!sim.dwell_error) sim.dwell_error = DwellErrorSpec{};
        sim.dwell_error->mu = as_double();
    } else if (key == "errors.dwell.sigma") {
        if (!sim.dwell_error) sim.dwell_error = DwellErrorSpec{};
        sim.dwell_error->sigma = as_double();
    } else if (key == "metrics.eval_positions") sim.eval_positions = static_cast<int>(as_ll());
    else if (key == "metrics.utility_a") sim.utility_a = as_double();
    else if (key == "metrics.utility_b") sim.utility_b = as_double();
    else if (key == "seed") sim.seed = static_cast<std::uint64_t>(as_ll());
    else if (key == "model.source") cfg.model_source = value;
    else if (key == "model.bin_width_s") sim.bin_width_s = as_double();
    else if (key == "model.fast_slow_boundary_s") cfg.fast_slow_boundary_s = as_double();
    else if (key == "trace.significant_only") cfg.significant_only = as_bool();
    else if (key == "trace.path_len") cfg.path_len = static_cast<int>(as_ll());
    else if (key == "trace.min_cars") cfg.min_cars = static_cast<long>(as_ll());
    else if (key == "optimize.objective") cfg.optimize_objective = value;
    else if (key == "verbose") cfg.verbose = as_bool();
    else throw UsageError("unknown config key '" + key + "'");
}

std::vector<CarPath> filter_trace(const ExperimentConfig& cfg, std::span<const CarPath> trace) {
    if (!cfg.significant_only) return {trace.begin(), trace.end()};
    const auto paths = significant_paths(trace, cfg.path_len, cfg.min_cars);
    std::set<std::vector<std::string>> keep;
    for (const auto& p : paths) keep.insert(p.en_sequence);
    std::vector<CarPath> out;
    for (const auto& car : trace) {
        if (keep.count(car.en_sequence)) out.push_back(car);
    }
    return out;
}

PrefetchModel build_model(const ExperimentConfig& cfg, std::span<const CarPath> trace) {
    if (cfg.model_source == "trace") return model_from_trace(trace, cfg.sim);
    if (cfg.model_source == "spec") {
        if (cfg.model_dwell.empty())
            throw DataError("model.source=spec requires model.spec_dwell entries");
        return model_from_dwell_spec(cfg.model_dwell, cfg.model_users, cfg.sim);
    }
    throw UsageError("model.source must be 'trace' or 'spec'");
}

MetricsReport run_single(const ExperimentConfig& cfg, std::span<const CarPath> trace) {
    const auto filtered = filter_trace(cfg, trace);
    const auto model = build_model(cfg, filtered);
    return run(cfg.sim, filtered, model, nullptr, cfg.verbose ? &std::cerr : nullptr);
}

std::vector<MetricsReport> run_sweep(const ExperimentConfig& cfg, std::span<const CarPath> trace) {
    const auto filtered = filter_trace(cfg, trace);
    const auto model = build_model(cfg, filtered);

    std::vector<long long> caches = cfg.sweep_cache_chunks;
    if (caches.empty()) caches.push_back(cfg.sim.cache_capacity_chunks);
    std::vector<std::uint64_t> seeds = cfg.sweep_seeds;
    if (seeds.empty()) seeds.push_back(cfg.sim.seed);
    std::vector<std::string> policies = cfg.sweep_policies;
    if (policies.empty()) policies.push_back(policy_name(cfg.sim.policy));

    std::vector<MetricsReport> rows;
    for (const auto& policy : policies) {
        for (long long cache : caches) {
            for (std::uint64_t seed : seeds) {
                SimulationConfig sim = cfg.sim;
                sim.policy = policy_from_name(policy);
                sim.cache_capacity_chunks = cache;
                sim.seed = seed;
                // X-hat depends on the per-run capacity, so the model is
                // capacity-free and capped inside run()
                rows.push_back(
                    run(sim, filtered, model, nullptr, cfg.verbose ? &std::cerr : nullptr));
            }
        }
    }
    return rows;
}

void write_reports_csv(std::span<const MetricsReport> reports, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_metrics_csv_header(out);
    for (const auto& r : reports) write_metrics_csv_row(r, out);
}

void write_reports_json(std::span<const MetricsReport> reports, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "[\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        out << metrics_to_json(reports[i]);
        if (i + 1 < reports.size()) out << ",";
        out << "\n";
    }
    out << "]\n";
}

double report_objective(const MetricsReport& r, const std::string& objective) {
    if (objective == "hit_probability") return r.hit_probability;
    if (objective == "cache_throughput") return r.cache_throughput_bps;
    if (objective == "utility") return r.joint_utility;
    throw UsageError("unknown objective '" + objective +
                     "' (expected hit_probability, cache_throughput, or utility)");
}

OptimizeOutcome optimize_thresholds(const ExperimentConfig& cfg, std::span<const CarPath> trace,
                                    std::span<const double> grid, const std::string& objective) {
    if (grid.empty()) throw UsageError("threshold grid is empty");
    for (double g : grid)
        if (!(g >= 0.0 && g <= 1.0)) throw UsageError("grid thresholds must lie in [0,1]");

    const auto filtered = filter_trace(cfg, trace);
    const auto model = build_model(cfg, filtered);
    const int dims = cfg.sim.plan_horizon;

    OptimizeOutcome out;
    std::vector<std::size_t> idx(static_cast<std::size_t>(dims), 0);
    bool first = true;
    while (true) {
        std::vector<double> taus;
        taus.reserve(idx.size());
        for (std::size_t i : idx) taus.push_back(grid[i]);

        SimulationConfig sim = cfg.sim;
        sim.policy = PolicyKind::rich;
        sim.taus = taus;
        const MetricsReport r = run(sim, filtered, model);
        const double value = report_objective(r, objective);
        out.surface.push_back({taus, value});
        // strictly-greater keeps the lexicographically smallest winner
        if (first || value > out.best_objective) {
            out.best_objective = value;
            out.best_taus = taus;
            first = false;
        }

        // odometer over the grid, last dimension fastest
        int d = dims - 1;
        for (; d >= 0; --d) {
            if (++idx[static_cast<std::size_t>(d)] < grid.size()) break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
        if (d < 0) break;
    }
    return out;
}

AnalyzeOutcome analyze_trace(const ExperimentConfig& cfg, std::span<const CarPath> trace) {
    AnalyzeOutcome out;
    const auto events = flatten_paths(trace);
    for (const auto& en : en_ids_in(trace)) {
        out.per_en.push_back(
            empirical_dwell_dist(events, en, cfg.sim.bin_width_s, cfg.fast_slow_boundary_s));
    }
    out.paths = significant_paths(trace, cfg.path_len, cfg.min_cars);
    return out;
}

namespace {
std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}
}  // namespace

void write_analyze_csv(const AnalyzeOutcome& a, const std::string& dwell_csv_path,
                       const std::string& paths_csv_path) {
    {
        std::ofstream out(dwell_csv_path, std::ios::binary);
        if (!out) throw DataError("cannot write '" + dwell_csv_path + "'");
        out << "en_id,samples,mean_dwell_s,skewness,kurtosis,avg_concurrent_users,fast_count,"
               "slow_count\n";
        for (const auto& st : a.per_en) {
            out << st.en_id << ',' << st.sample_count << ',' << fmt(st.mean_dwell_s) << ','
                << fmt(st.skewness) << ',' << fmt(st.kurtosis) << ','
                << fmt(st.avg_concurrent_users) << ',' << st.fast_count << ',' << st.slow_count
                << '\n';
        }
    }
    {
        std::ofstream out(paths_csv_path, std::ios::binary);
        if (!out) throw DataError("cannot write '" + paths_csv_path + "'");
        out << "path,car_count\n";
        for (const auto& p : a.paths) {
            std::string joined;
            for (std::size_t i = 0; i < p.en_sequence.size(); ++i) {
                if (i) joined += '-';
                joined += p.en_sequence[i];
            }
            out << joined << ',' << p.car_count << '\n';
        }
    }
}

void write_analyze_json(const AnalyzeOutcome& a, const std::string& json_path) {
    ordered_json j;
    auto ens = ordered_json::array();
    for (const auto& st : a.per_en) {
        ordered_json je;
        je["en_id"] = st.en_id;
        je["samples"] = st.sample_count;
        je["bin_width_s"] = st.bin_width;
        je["mean_dwell_s"] = st.mean_dwell_s;
        je["skewness"] = st.skewness;
        je["kurtosis"] = st.kurtosis;
        je["avg_concurrent_users"] = st.avg_concurrent_users;
        je["fast_count"] = st.fast_count;
        je["slow_count"] = st.slow_count;
        je["dwell_pdf"] = st.dwell_pdf.probs();
        if (st.fast_pdf) je["fast_pdf"] = st.fast_pdf->probs();
        if (st.slow_pdf) je["slow_pdf"] = st.slow_pdf->probs();
        ens.push_back(std::move(je));
    }
    j["per_en"] = std::move(ens);
    auto paths = ordered_json::array();
    for (const auto& p : a.paths) {
        ordered_json jp;
        jp["ens"] = p.en_sequence;
        jp["car_count"] = p.car_count;
        paths.push_back(std::move(jp));
    }
    j["significant_paths"] = std::move(paths);
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + json_path + "'");
    out << j.dump(2) << "\n";
}

PlanOutcome compute_plan(const ExperimentConfig& cfg, std::span<const CarPath> trace) {
    if (cfg.plan_path.empty()) throw UsageError("plan.path must name the EN sequence to plan over");
    const auto model = build_model(cfg, trace);

    std::vector<DiscretePdf> pdfs;
    std::vector<double> taus;
    for (std::size_t pos = 0; pos < cfg.plan_path.size(); ++pos) {
        auto it = model.per_en.find(cfg.plan_path[pos]);
        if (it == model.per_en.end())
            throw DataError("plan path references unknown EN '" + cfg.plan_path[pos] + "'");
        pdfs.push_back(truncate_to_cache(it->second.x_pdf, cfg.sim.cache_capacity_chunks));
        taus.push_back(cfg.sim.taus[std::min(pos, cfg.sim.taus.size() - 1)]);
    }

    PlanOutcome out;
    out.phi = phi_general(pdfs, static_cast<int>(cfg.sim.catalog.chunks_per_content));
    out.plan = rich_plan(out.phi, make_threshold_profile(out.phi, taus),
                         cfg.sim.keep_partial_on_failure);
    return out;
}

}  // namespace rich
