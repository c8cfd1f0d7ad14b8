// Acceptance suite: one independently checkable criterion per function,
// one PASS/FAIL line each, non-zero exit if anything failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rich.h"
#include "rich/edge_cache.hpp"
#include "rich/experiment.hpp"
#include "rich/policy.hpp"
#include "rich/probmodel.hpp"
#include "rich/rng.hpp"
#include "rich/simulation.hpp"
#include "rich/synthetic.hpp"
#include "rich/trace.hpp"

using namespace rich;

namespace {

int g_failures = 0;

class Criterion {
public:
    Criterion(int id, const char* what) : id_(id), what_(what) {
        start_ = std::chrono::steady_clock::now();
    }
    void expect(bool ok, const char* detail) {
        if (!ok) {
            ok_ = false;
            details_.push_back(detail);
        }
    }
    ~Criterion() {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::printf("[%s] criterion %2d: %s (%.2fs)\n", ok_ ? "PASS" : "FAIL", id_, what_, secs);
        for (const auto& d : details_) std::printf("         - failed: %s\n", d.c_str());
        if (!ok_) ++g_failures;
        std::fflush(stdout);
    }

private:
    int id_;
    const char* what_;
    bool ok_ = true;
    std::vector<std::string> details_;
    std::chrono::steady_clock::time_point start_;
};

DiscretePdf random_pdf(std::mt19937_64& rng, int max_support) {
    std::uniform_int_distribution<int> support_dist(1, max_support);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int support = support_dist(rng);
    std::vector<double> w(static_cast<std::size_t>(support) + 1, 0.0);
    double total = 0.0;
    for (auto& x : w) {
        if (u(rng) < 0.35) continue;
        x = u(rng);
        total += x;
    }
    if (total == 0.0) {
        w.back() = 1.0;
        total = 1.0;
    }
    for (auto& x : w) x /= total;
    return DiscretePdf(std::move(w));
}

DiscretePdf triangular_mean10() {
    std::vector<double> p(20, 0.0);
    for (int v = 1; v <= 19; ++v) p[static_cast<std::size_t>(v)] = (10.0 - std::abs(v - 10)) / 100.0;
    return DiscretePdf(std::move(p));
}

// mass that the per-EN laws place on each chunk, per EN position
void criterion1() {
    Criterion c(1, "per-EN download mass equals the capped mean chunk count (1e-6)");
    std::mt19937_64 rng(1001);
    for (int round = 0; round < 200; ++round) {
        const int n = 1 + round % 5;
        std::vector<DiscretePdf> pdfs;
        int support_sum = 0;
        for (int i = 0; i < n; ++i) {
            auto x = random_pdf(rng, 25);
            const long long cap = static_cast<long long>(rng() % 30);
            pdfs.push_back(truncate_to_cache(x, cap));
            support_sum += pdfs.back().max_value();
        }
        const PhiMatrix phi = phi_general(pdfs, support_sum + 1);
        for (int i = 0; i < n; ++i) {
            double row = 0.0;
            for (int k = 1; k <= phi.n_chunks; ++k) row += phi.at(i, k);
            if (std::abs(row - pdfs[static_cast<std::size_t>(i)].mean()) > 1e-6) {
                c.expect(false, "row mass deviates from E[X-hat] by more than 1e-6");
                return;
            }
        }
    }
}

void criterion2() {
    Criterion c(2, "iid convolution route matches the general route (1e-12)");
    std::mt19937_64 rng(1002);
    for (int round = 0; round < 100; ++round) {
        const auto f = random_pdf(rng, 25);
        const int n = 1 + round % 5;
        const int k_max = (f.max_value() + 2) * n + 5;
        const PhiMatrix a = phi_iid(f, n, k_max);
        std::vector<DiscretePdf> pdfs(static_cast<std::size_t>(n), f);
        const PhiMatrix b = phi_general(pdfs, k_max);
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            if (std::abs(a.values[i] - b.values[i]) > 1e-12) {
                c.expect(false, "elementwise gap above 1e-12");
                return;
            }
        }
    }
}

void criterion3() {
    Criterion c(3, "million-car sampling reproduces the analytic matrix (+-0.005)");
    std::vector<DiscretePdf> pdfs(4, triangular_mean10());
    const int k_max = 80;
    const PhiMatrix phi = phi_general(pdfs, k_max);

    for (int k = 20; k <= k_max; ++k) c.expect(phi.at(0, k) == 0.0, "phi_1 must vanish beyond 19");
    int argmax = 1;
    for (int k = 1; k <= k_max; ++k) {
        if (phi.at(1, k) > phi.at(1, argmax)) argmax = k;
    }
    c.expect(argmax >= 14 && argmax <= 16, "phi_2 peak out of the 14..16 band");

    Rng rng(1003);
    const int n_cars = 1000000;
    std::vector<std::vector<long>> counts(4, std::vector<long>(k_max + 1, 0));
    for (int s = 0; s < n_cars; ++s) {
        long long y = 0;
        for (int i = 0; i < 4; ++i) {
            const int x = pdfs[static_cast<std::size_t>(i)].quantile(rng.uniform01());
            const long long hi = std::min<long long>(y + x, k_max);
            for (long long k = y + 1; k <= hi; ++k)
                ++counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            y += x;
        }
    }
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
        for (int k = 1; k <= k_max; ++k) {
            const double mc =
                static_cast<double>(counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]) /
                n_cars;
            worst = std::max(worst, std::abs(mc - phi.at(i, k)));
        }
    }
    c.expect(worst <= 0.005, "sampled frequency off the analytic value by more than 0.005");
}

ExperimentConfig toy_mixture_config() {
    ExperimentConfig cfg;
    cfg.sim.radio_bandwidth_bps = 5.2e6;
    cfg.sim.catalog.n_contents = 1;
    cfg.sim.catalog.chunks_per_content = 100;
    cfg.sim.catalog.chunk_size_bits = 520000.0;
    cfg.sim.plan_horizon = 1;
    cfg.sim.taus = {0.1};
    cfg.sim.cache_capacity_chunks = 200;
    cfg.significant_only = false;
    cfg.model_source = "spec";
    cfg.model_dwell["A"] = {{1.02, 0.8}, {10.02, 0.2}};

    SyntheticTraceSpec spec;
    spec.paths = {{{"A"}, 1.0}};
    spec.dwell["A"] = DwellMixture{{{1.02, 0.8}, {10.02, 0.2}}};
    spec.n_cars = 1200;
    spec.arrival_rate_hz = 0.005;
    cfg.synthetic = spec;
    return cfg;
}

void criterion4() {
    Criterion c(4, "fast/slow toy: mean 28 exact, mean-based hit 0.48+-0.02, full plan hits 1.0");
    auto cfg = toy_mixture_config();

    // analytic side: 80% of cars reach 10 chunks, 20% reach 100 -> mean 28
    const auto model = build_model(cfg, std::vector<CarPath>{});
    const auto& x = model.per_en.at("A").x_pdf;
    c.expect(x.mean() == 28.0, "mean downloadable chunks must equal 28 exactly");
    c.expect(x.at(10) == 0.8 && x.at(100) == 0.2, "chunk-count law must be the 80/20 mixture");

    const auto trace = generate_synthetic_trace(*cfg.synthetic, 401);

    auto np = cfg;
    np.sim.policy = PolicyKind::netpredict;  // caches chunks 1..28 of each request
    const auto r_np = run_single(np, trace);
    c.expect(std::abs(r_np.hit_probability - 0.48) <= 0.02,
             "mean-based policy hit probability outside 0.48 +- 0.02");

    auto rich_cfg = cfg;  // tau 0.1 stores every reachable chunk, i.e. 1..100
    rich_cfg.sim.policy = PolicyKind::rich;
    const auto r_rich = run_single(rich_cfg, trace);
    c.expect(r_rich.hit_probability == 1.0, "distribution-aware plan must hit on every request");
    c.expect(r_rich.misses == 0, "no request may fall through to recovery");
}

void criterion5() {
    Criterion c(5, "threshold extremes behave per the greedy rule on 50 random matrices");
    std::mt19937_64 rng(1005);
    for (int round = 0; round < 50; ++round) {
        const int n = 2 + static_cast<int>(rng() % 4);
        std::vector<DiscretePdf> pdfs;
        for (int i = 0; i < n; ++i) pdfs.push_back(random_pdf(rng, 12));
        const int k_max = 14 * n;
        const PhiMatrix phi = phi_general(pdfs, k_max);

        const auto zero = rich::rich_plan(phi, uniform_threshold_profile(phi, 0.0));
        const auto one = rich::rich_plan(phi, uniform_threshold_profile(phi, 1.0));
        for (int k = 1; k <= k_max; ++k) {
            double best = 0.0, col = 0.0;
            int arg = -1;
            std::vector<int> positive;
            for (int i = 0; i < n; ++i) {
                const double v = phi.at(i, k);
                col += v;
                if (v > 0.0) positive.push_back(i);
                if (v > best) {
                    best = v;
                    arg = i;
                }
            }
            if (arg < 0) {
                c.expect(zero.ens_for(k).empty(), "tau=0 must skip unreachable chunks");
            } else {
                c.expect(zero.ens_for(k) == std::vector<int>{arg},
                         "tau=0 must store one copy at the most probable EN");
            }
            if (col >= 1.0 - 1e-9) {
                c.expect(one.ens_for(k) == positive,
                         "tau=1 must store at every EN that can deliver the chunk");
            } else {
                c.expect(one.ens_for(k).empty(), "tau=1 must store nothing when mass stays below 1");
            }
        }

        // brute-force reference of the greedy loop at interior thresholds
        for (double tau : {0.25, 0.6, 0.9}) {
            const auto plan = rich::rich_plan(phi, uniform_threshold_profile(phi, tau));
            for (int k = 1; k <= k_max; ++k) {
                std::vector<std::pair<double, int>> cand;
                for (int i = 0; i < n; ++i) {
                    if (phi.at(i, k) > 0.0) cand.emplace_back(phi.at(i, k), i);
                }
                std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
                    if (a.first != b.first) return a.first > b.first;
                    return a.second < b.second;
                });
                std::vector<int> ref;
                double p = 0.0;
                for (const auto& [v, i] : cand) {
                    if (p > tau) break;
                    p += v;
                    ref.push_back(i);
                }
                if (p < tau - 1e-9) ref.clear();
                std::sort(ref.begin(), ref.end());
                if (plan.ens_for(k) != ref) {
                    c.expect(false, "greedy selection differs from the reference loop");
                    return;
                }
            }
        }
    }
}

void criterion6() {
    Criterion c(6, "deterministic chunk counts collapse the greedy plan onto mean ranges");
    std::mt19937_64 rng(1006);
    for (int round = 0; round < 20; ++round) {
        const int n = 2 + static_cast<int>(rng() % 3);
        std::vector<DiscretePdf> pdfs;
        std::vector<double> means;
        for (int i = 0; i < n; ++i) {
            const int v = 1 + static_cast<int>(rng() % 20);
            pdfs.push_back(DiscretePdf::point_mass(v));
            means.push_back(static_cast<double>(v));
        }
        const int k_max = 25 * n;
        const PhiMatrix phi = phi_general(pdfs, k_max);
        const auto ranges = netpredict_plan(means, 1);
        for (double tau : {0.1, 0.5, 0.9}) {
            const auto plan = rich::rich_plan(phi, uniform_threshold_profile(phi, tau));
            for (int i = 0; i < n; ++i) {
                std::vector<long long> greedy;
                for (int k = 1; k <= k_max; ++k) {
                    const auto& s = plan.ens_for(k);
                    if (std::binary_search(s.begin(), s.end(), i)) greedy.push_back(k);
                }
                std::vector<long long> range;
                for (long long k = ranges[static_cast<std::size_t>(i)].first;
                     k <= ranges[static_cast<std::size_t>(i)].last && k <= k_max; ++k)
                    range.push_back(k);
                if (greedy != range) {
                    c.expect(false, "greedy assignment differs from the mean range");
                    return;
                }
            }
        }
    }
}

ExperimentConfig bimodal_scenario(long n_cars) {
    ExperimentConfig cfg;
    cfg.sim.radio_bandwidth_bps = 5.2e6;
    cfg.sim.catalog.n_contents = 10;
    cfg.sim.catalog.chunks_per_content = 2600;
    cfg.sim.catalog.chunk_size_bits = 520000.0;
    cfg.sim.plan_horizon = 2;
    cfg.sim.taus = {0.5, 0.5};
    cfg.sim.cache_capacity_chunks = 2600;  // one content's worth: 0.1 of the catalog
    cfg.sim.zipf_alpha = 0.75;
    cfg.significant_only = false;
    cfg.model_source = "spec";

    SyntheticTraceSpec spec;
    spec.paths = {{{"A", "B", "C"}, 1.0}};
    for (const char* en : {"A", "B", "C"}) {
        cfg.model_dwell[en] = {{2.02, 0.8}, {20.02, 0.2}};
        spec.dwell[en] = DwellMixture{{{2.02, 0.8}, {20.02, 0.2}}};
    }
    spec.n_cars = n_cars;
    spec.arrival_rate_hz = 0.05;  // low enough that the shared radio stays uncongested
    spec.inter_en_gap_s = 3.0;
    cfg.synthetic = spec;
    return cfg;
}

void criterion7() {
    Criterion c(7, "bimodal 3-EN scenario orders the policies on hits and backhaul");
    auto cfg = bimodal_scenario(2000);

    // tune the thresholds once, on the first seed's trace
    const auto tune_trace = generate_synthetic_trace(*cfg.synthetic, 1);
    const std::vector<double> grid{0.2, 0.5, 0.8};
    const auto tuned = optimize_thresholds(cfg, tune_trace, grid, "hit_probability");

    double hit[3] = {0, 0, 0};
    double backhaul[3] = {0, 0, 0};
    const PolicyKind kinds[3] = {PolicyKind::rich, PolicyKind::netpredict, PolicyKind::pop};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto trace = generate_synthetic_trace(*cfg.synthetic, seed);
        for (int p = 0; p < 3; ++p) {
            auto run_cfg = cfg;
            run_cfg.sim.policy = kinds[p];
            run_cfg.sim.seed = seed;
            if (kinds[p] == PolicyKind::rich) run_cfg.sim.taus = tuned.best_taus;
            const auto r = run_single(run_cfg, trace);
            hit[p] += r.hit_probability / 5.0;
            backhaul[p] += r.backhaul_traffic_bps / 5.0;
        }
    }
    std::printf("         hit: rich=%.4f netpredict=%.4f pop=%.4f\n", hit[0], hit[1], hit[2]);
    std::printf("         backhaul Mbps: rich=%.3f netpredict=%.3f pop=%.3f\n", backhaul[0] / 1e6,
                backhaul[1] / 1e6, backhaul[2] / 1e6);
    c.expect(hit[0] > hit[1], "tuned thresholds must beat the mean-based policy on hits");
    c.expect(hit[1] > hit[2], "the mean-based policy must beat popularity-only on hits");
    c.expect(backhaul[0] < backhaul[1], "backhaul order must reverse: tuned < mean-based");
    c.expect(backhaul[1] < backhaul[2], "backhaul order must reverse: mean-based < popularity");
}

void criterion8() {
    Criterion c(8, "eviction never outranks delivered entries; occupancy stays bounded");
    std::mt19937_64 rng(1008);
    for (int round = 0; round < 10000; ++round) {
        const long long capacity = 1 + static_cast<long long>(rng() % 8);
        EdgeCache cache("A", capacity);
        for (int op = 0; op < 40; ++op) {
            auto delivered_before = [&] {
                std::set<ChunkKey> d;
                for (const auto& e : cache.entries())
                    if (e.delivered) d.insert(e.key);
                return d;
            }();
            auto keys_before = [&] {
                std::set<ChunkKey> all;
                for (const auto& e : cache.entries()) all.insert(e.key);
                return all;
            }();

            const int what = static_cast<int>(rng() % 100);
            const ChunkKey key{1, 1 + static_cast<long long>(rng() % 12)};
            if (what < 50) {
                const int pend[] = {static_cast<int>(rng() % 4)};
                cache.insert(key, CachePartition::prefetch, (rng() % 100) / 100.0, pend);
            } else if (what < 75) {
                cache.lookup(key, static_cast<int>(rng() % 4));
            } else if (what < 90) {
                cache.evict_for(1 + static_cast<long long>(rng() % 3));
            } else {
                cache.release_car(static_cast<int>(rng() % 4));
            }

            if (cache.size() > capacity) {
                c.expect(false, "occupancy exceeded capacity");
                return;
            }
            // if an undelivered entry vanished, every previously delivered
            // entry must have vanished first
            std::set<ChunkKey> now;
            for (const auto& e : cache.entries()) now.insert(e.key);
            bool undelivered_evicted = false;
            for (const auto& k : keys_before) {
                if (!now.count(k) && !delivered_before.count(k) && k != key)
                    undelivered_evicted = true;
            }
            if (undelivered_evicted) {
                for (const auto& k : delivered_before) {
                    if (now.count(k)) {
                        c.expect(false, "an undelivered entry left while a delivered one stayed");
                        return;
                    }
                }
            }
        }
    }
}

void criterion9() {
    Criterion c(9, "dwell shifts and path skips move the metrics the expected way");
    auto cfg = bimodal_scenario(800);
    const auto trace = generate_synthetic_trace(*cfg.synthetic, 11);

    auto run_mu = [&](double mu) {
        auto c2 = cfg;
        c2.sim.dwell_error = DwellErrorSpec{mu, 0.0};
        return run_single(c2, trace);
    };
    const auto minus = run_mu(-30.0);
    const auto base = run_mu(0.0);
    const auto plus = run_mu(30.0);
    std::printf("         hit: mu=-30 %.4f | mu=0 %.4f | mu=+30 %.4f\n", minus.hit_probability,
                base.hit_probability, plus.hit_probability);
    std::printf("         backhaul Mbps: %.3f | %.3f | %.3f\n", minus.backhaul_traffic_bps / 1e6,
                base.backhaul_traffic_bps / 1e6, plus.backhaul_traffic_bps / 1e6);
    c.expect(plus.hit_probability <= base.hit_probability,
             "hit probability must not rise when cars dwell longer than modeled");
    c.expect(minus.backhaul_traffic_bps <= base.backhaul_traffic_bps,
             "shorter dwells must not add backhaul traffic");
    c.expect(base.backhaul_traffic_bps <= plus.backhaul_traffic_bps,
             "longer dwells must not reduce backhaul traffic");

    auto skip_cfg = cfg;
    skip_cfg.sim.path_skip_fraction = 0.2;
    const auto skipped = run_single(skip_cfg, trace);
    const auto baseline = run_single(cfg, trace);
    std::printf("         throughput Mbps: base %.3f | 20%% skip %.3f\n",
                baseline.cache_throughput_bps / 1e6, skipped.cache_throughput_bps / 1e6);
    c.expect(skipped.cache_throughput_bps < baseline.cache_throughput_bps,
             "skipping the second EN must cost cache throughput");
}

void criterion10() {
    Criterion c(10, "identical config and seed give byte-identical output files");
    namespace fs = std::filesystem;
    const auto root = fs::temp_directory_path() / "rich_acceptance_det";
    fs::remove_all(root);
    fs::create_directories(root);

    const char* cfg_json = R"({
      "radio": {"bandwidth_bps": 5.2e6},
      "catalog": {"n_contents": 3, "chunks_per_content": 80, "chunk_size_bits": 520000},
      "policy": {"kind": "rich", "taus": [0.6, 0.4], "plan_horizon": 2},
      "cache": {"capacity_chunks": 120},
      "trace": {"significant_only": false},
      "errors": {"dwell": {"mu": 1.0, "sigma": 2.0}, "path_skip_fraction": 0.25},
      "model": {"source": "trace"},
      "sweep": {"policies": ["rich", "netpredict", "pop"], "cache_chunks": [80, 160],
                "seeds": [3, 4]},
      "synthetic": {
        "paths": [{"ens": ["A", "B", "C"], "weight": 1.0}, {"ens": ["A", "C"], "weight": 0.5}],
        "dwell": {"A": [[1.52, 0.6], [6.02, 0.4]], "B": [[2.52, 1.0]], "C": [[3.02, 1.0]]},
        "n_cars": 80, "arrival_rate_hz": 0.4, "inter_en_gap_s": 2.0
      }
    })";
    rich_config* cfg = nullptr;
    c.expect(rich_config_parse(cfg_json, &cfg) == RICH_OK, "config must parse");
    rich_trace* trace = nullptr;
    c.expect(rich_trace_generate(cfg, 21, &trace) == RICH_OK, "trace generation must succeed");

    const auto dir1 = (root / "run1").string();
    const auto dir2 = (root / "run2").string();
    c.expect(rich_simulate_sweep(cfg, trace, dir1.c_str()) == RICH_OK, "first sweep must run");
    c.expect(rich_simulate_sweep(cfg, trace, dir2.c_str()) == RICH_OK, "second sweep must run");

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    for (const char* name : {"metrics.csv", "metrics.json"}) {
        const auto a = slurp(fs::path(dir1) / name);
        const auto b = slurp(fs::path(dir2) / name);
        c.expect(!a.empty() && a == b, "output files must match byte for byte");
    }
    rich_trace_free(trace);
    rich_config_free(cfg);
    fs::remove_all(root);
}

void criterion11() {
    Criterion c(11, "significant-path extraction returns the embedded seven paths exactly");
    const std::vector<std::pair<std::string, long>> spec_paths = {
        {"ABC", 54}, {"ABF", 555}, {"CDE", 337}, {"FBA", 810},
        {"FBC", 91}, {"HDC", 45},  {"HGA", 161}};
    std::vector<CarPath> trace;
    long car_no = 0;
    auto add_cars = [&](const std::string& ens, long count) {
        for (long i = 0; i < count; ++i) {
            CarPath p;
            p.car_id = "car" + std::to_string(++car_no);
            for (char en : ens) p.en_sequence.push_back(std::string(1, en));
            trace.push_back(std::move(p));
        }
    };
    for (const auto& [ens, count] : spec_paths) add_cars(ens, count);
    add_cars("ACD", 44);  // below the car threshold
    add_cars("GH", 300);  // wrong length
    add_cars("A", 50);

    std::mt19937_64 rng(1011);
    std::shuffle(trace.begin(), trace.end(), rng);
    const auto found = significant_paths(trace, 3, 45);

    c.expect(found.size() == 7, "exactly seven paths must qualify");
    std::map<std::string, long> by_name;
    for (const auto& p : found) {
        std::string name;
        for (const auto& en : p.en_sequence) name += en;
        by_name[name] = p.car_count;
    }
    for (const auto& [ens, count] : spec_paths) {
        auto it = by_name.find(ens);
        c.expect(it != by_name.end() && it->second == count,
                 "a path is missing or has the wrong car count");
    }
    for (std::size_t i = 1; i < found.size(); ++i)
        c.expect(found[i - 1].car_count >= found[i].car_count,
                 "paths must come most-traveled first");
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    criterion11();
    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all 11 criteria passed\n");
    return 0;
}
