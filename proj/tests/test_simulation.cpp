#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rich/errors.hpp"
#include "rich/metrics.hpp"
#include "rich/rng.hpp"
#include "rich/simulation.hpp"

using namespace rich;

namespace {

SimulationConfig toy_config() {
    SimulationConfig cfg;
    cfg.radio_bandwidth_bps = 5.2e6;  // 10 chunks/s per lone car
    cfg.catalog.n_contents = 1;
    cfg.catalog.chunks_per_content = 100;
    cfg.catalog.chunk_size_bits = 520000.0;
    cfg.taus = {0.1, 0.1};
    cfg.plan_horizon = 2;
    cfg.cache_capacity_chunks = 1000;
    cfg.seed = 1;
    return cfg;
}

CarPath make_car(const std::string& id, std::vector<std::tuple<std::string, double, double>> legs) {
    CarPath p;
    p.car_id = id;
    for (const auto& [en, enter, exit] : legs) {
        p.en_sequence.push_back(en);
        p.events.push_back({id, en, enter, exit});
    }
    return p;
}

PrefetchModel fixed_dwell_model(const SimulationConfig& cfg,
                                std::map<std::string, double> dwell_s) {
    std::map<std::string, std::vector<std::pair<double, double>>> mix;
    for (const auto& [en, w] : dwell_s) mix[en] = {{w, 1.0}};
    return model_from_dwell_spec(mix, {}, cfg);
}

}  // namespace

TEST_CASE("perturb_dwell: identity, clamp, deterministic shift") {
    Rng rng(1);
    CHECK(perturb_dwell(10.0, 0.0, 0.0, 1.0, rng) == 10.0);
    CHECK(perturb_dwell(10.0, -1000.0, 0.0, 1.0, rng) == 1.0);
    CHECK(perturb_dwell(10.0, 5.0, 0.0, 1.0, rng) == 15.0);
}

TEST_CASE("apply_dwell_error stretches later legs and keeps cars consistent") {
    std::vector<CarPath> trace{
        make_car("c1", {{"A", 0.0, 10.0}, {"B", 15.0, 25.0}, {"C", 30.0, 40.0}})};
    Rng rng(2);
    auto out = apply_dwell_error(trace, {5.0, 0.0}, {{"A", 1.0}, {"B", 1.0}, {"C", 1.0}}, rng);
    REQUIRE(out.size() == 1);
    const auto& evs = out[0].events;
    CHECK(evs[0].t_enter == 0.0);
    CHECK(evs[0].t_exit == 15.0);
    CHECK(evs[1].t_enter == 20.0);  // shifted by the first leg's +5
    CHECK(evs[1].t_exit == 35.0);
    CHECK(evs[2].t_enter == 40.0);
    for (std::size_t i = 1; i < evs.size(); ++i) CHECK(evs[i].t_enter >= evs[i - 1].t_exit);
}

TEST_CASE("apply_path_skip: fraction 0 and 1") {
    std::vector<CarPath> trace;
    for (int i = 0; i < 10; ++i)
        trace.push_back(make_car("c" + std::to_string(i),
                                 {{"A", i * 50.0, i * 50.0 + 5},
                                  {"B", i * 50.0 + 10, i * 50.0 + 15},
                                  {"C", i * 50.0 + 20, i * 50.0 + 25}}));
    Rng rng(3);
    auto none = apply_path_skip(trace, 0.0, rng);
    for (const auto& p : none) CHECK(p.events.size() == 3);
    auto all = apply_path_skip(trace, 1.0, rng);
    for (const auto& p : all) {
        CHECK(p.events.size() == 2);
        CHECK(p.en_sequence == std::vector<std::string>{"A", "C"});
    }
}

TEST_CASE("apply_path_skip: exact count without replacement") {
    std::vector<CarPath> trace;
    for (int i = 0; i < 1000; ++i)
        trace.push_back(make_car("c" + std::to_string(i),
                                 {{"A", i * 50.0, i * 50.0 + 5}, {"B", i * 50.0 + 10, i * 50.0 + 15}}));
    Rng rng(4);
    auto out = apply_path_skip(trace, 0.5, rng);
    long modified = 0;
    for (const auto& p : out)
        if (p.events.size() == 1) ++modified;
    CHECK(modified == 500);
}

TEST_CASE("zipf: single content, rank ratio, and empirical frequencies") {
    Rng rng(5);
    for (int i = 0; i < 20; ++i) CHECK(draw_content_request(0.75, 1, rng) == 1);

    ZipfSampler z(10, 0.75);
    CHECK(z.pmf(1) / z.pmf(2) == doctest::Approx(std::pow(2.0, 0.75)).epsilon(1e-12));

    std::vector<long> counts(11, 0);
    const long n = 1000000;
    for (long i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(z.sample(rng))];
    for (int r = 1; r <= 10; ++r) {
        const double freq = static_cast<double>(counts[static_cast<std::size_t>(r)]) / n;
        CHECK(std::abs(freq - z.pmf(r)) < 0.005);
    }
}

TEST_CASE("fully provisioned single EN: every chunk is a cache hit") {
    auto cfg = toy_config();
    cfg.catalog.chunks_per_content = 10;  // the plan covers the dwell exactly
    std::vector<CarPath> trace{make_car("c1", {{"A", 10.0, 11.02}})};
    const auto model = fixed_dwell_model(cfg, {{"A", 1.02}});  // 10 chunks in the model

    RunDebug dbg;
    dbg.record_deliveries = true;
    const auto r = run(cfg, trace, model, &dbg);
    CHECK(r.hits == 10);
    CHECK(r.misses == 0);
    CHECK(r.hit_probability == 1.0);
    CHECK(r.recovery_bits == 0);
    CHECK(r.prefetch_bits == 10 * 520000);
    CHECK(r.covered_time_s == doctest::Approx(1.02));
    REQUIRE(dbg.deliveries.count("c1"));
    const auto& seq = dbg.deliveries["c1"];
    REQUIRE(seq.size() == 10);
    for (std::size_t i = 0; i < seq.size(); ++i) CHECK(seq[i] == static_cast<long long>(i + 1));
}

TEST_CASE("empty plan sends every chunk through data recovery") {
    auto cfg = toy_config();
    cfg.taus = {1.0, 1.0};  // unreachable: half the model mass downloads nothing
    std::vector<CarPath> trace{make_car("c1", {{"A", 10.0, 11.02}})};
    std::map<std::string, std::vector<std::pair<double, double>>> mix{
        {"A", {{0.5, 0.5}, {1.02, 0.5}}}};
    const auto model = model_from_dwell_spec(mix, {}, cfg);

    const auto r = run(cfg, trace, model);
    CHECK(r.hits == 0);
    CHECK(r.misses == 10);
    CHECK(r.hit_probability == 0.0);
    CHECK(r.prefetch_bits == 0);
    CHECK(r.recovery_bits >= 10 * 520000);
    CHECK(r.backhaul_traffic_bps > 0.0);
}

TEST_CASE("identical runs produce identical reports") {
    auto cfg = toy_config();
    cfg.catalog.n_contents = 3;
    cfg.dwell_error = DwellErrorSpec{2.0, 1.0};
    cfg.path_skip_fraction = 0.3;
    std::vector<CarPath> trace;
    for (int i = 0; i < 40; ++i)
        trace.push_back(make_car("c" + std::to_string(i),
                                 {{"A", i * 3.0, i * 3.0 + 1.5},
                                  {"B", i * 3.0 + 4.0, i * 3.0 + 5.5},
                                  {"C", i * 3.0 + 8.0, i * 3.0 + 9.5}}));
    const auto model = fixed_dwell_model(cfg, {{"A", 1.5}, {"B", 1.5}, {"C", 1.5}});
    const auto a = run(cfg, trace, model);
    const auto b = run(cfg, trace, model);
    CHECK(metrics_to_json(a) == metrics_to_json(b));
}

TEST_CASE("netpredict covers a deterministic two-EN walk end to end") {
    auto cfg = toy_config();
    cfg.policy = PolicyKind::netpredict;
    cfg.catalog.chunks_per_content = 20;
    std::vector<CarPath> trace{make_car("c1", {{"A", 5.0, 6.02}, {"B", 10.0, 11.02}})};
    const auto model = fixed_dwell_model(cfg, {{"A", 1.02}, {"B", 1.02}});

    RunDebug dbg;
    dbg.record_deliveries = true;
    const auto r = run(cfg, trace, model, &dbg);
    CHECK(r.hits == 20);
    CHECK(r.misses == 0);
    const auto& seq = dbg.deliveries["c1"];
    REQUIRE(seq.size() == 20);
    for (std::size_t i = 0; i < seq.size(); ++i) CHECK(seq[i] == static_cast<long long>(i + 1));
}

TEST_CASE("metrics can be scoped to the first path positions") {
    auto cfg = toy_config();
    cfg.policy = PolicyKind::netpredict;
    cfg.eval_positions = 1;
    std::vector<CarPath> trace{make_car("c1", {{"A", 5.0, 6.02}, {"B", 10.0, 11.02}})};
    const auto model = fixed_dwell_model(cfg, {{"A", 1.02}, {"B", 1.02}});
    const auto r = run(cfg, trace, model);
    CHECK(r.hits == 10);  // the second EN's deliveries do not count
    CHECK(r.covered_time_s == doctest::Approx(1.02));
}

TEST_CASE("radio is shared fluidly between concurrent cars") {
    auto cfg = toy_config();
    cfg.policy = PolicyKind::pop;
    cfg.cache_capacity_chunks = 100;  // full catalog: every request hits
    std::vector<CarPath> trace{make_car("c1", {{"A", 0.0, 1.02}}),
                               make_car("c2", {{"A", 0.0, 1.02}})};
    const auto model = fixed_dwell_model(cfg, {{"A", 1.02}});

    RunDebug dbg;
    dbg.record_deliveries = true;
    const auto r = run(cfg, trace, model, &dbg);
    // 5.2e6 bps split two ways = 5 chunks per car within 1.02 s
    CHECK(dbg.deliveries["c1"].size() == 5);
    CHECK(dbg.deliveries["c2"].size() == 5);
    CHECK(r.hits == 10);
    CHECK(r.covered_time_s == doctest::Approx(1.02));  // union, not per-car sum
}

TEST_CASE("pop with the whole catalog cached never recovers") {
    auto cfg = toy_config();
    cfg.policy = PolicyKind::pop;
    cfg.catalog.n_contents = 3;
    cfg.cache_capacity_chunks = 300;
    std::vector<CarPath> trace;
    for (int i = 0; i < 12; ++i)
        trace.push_back(make_car("c" + std::to_string(i), {{"A", i * 2.0, i * 2.0 + 1.02}}));
    const auto model = fixed_dwell_model(cfg, {{"A", 1.02}});
    const auto r = run(cfg, trace, model);
    CHECK(r.hit_probability == 1.0);
    CHECK(r.recovery_bits == 0);
    CHECK(r.network_cache_occupancy == doctest::Approx(1.0));  // one EN holding everything
}

TEST_CASE("content reuse drives the backhaul overhead negative") {
    auto cfg = toy_config();
    cfg.catalog.chunks_per_content = 1;  // one-chunk content
    cfg.taus = {0.1};
    cfg.plan_horizon = 1;
    std::vector<CarPath> trace{make_car("c1", {{"A", 0.0, 1.02}}),
                               make_car("c2", {{"A", 10.0, 11.02}}),
                               make_car("c3", {{"A", 20.0, 21.02}})};
    const auto model = fixed_dwell_model(cfg, {{"A", 1.02}});
    const auto r = run(cfg, trace, model);
    CHECK(r.hits == 3);
    CHECK(r.prefetch_bits == 520000);  // fetched once, delivered three times
    REQUIRE(r.overhead.has_value());
    CHECK(*r.overhead == doctest::Approx(-2.0 / 3.0));
}

TEST_CASE("refresh plans fire once per horizon window") {
    auto cfg = toy_config();
    cfg.plan_horizon = 2;
    std::vector<CarPath> trace{make_car("c1", {{"A", 0.0, 1.02},
                                               {"B", 5.0, 6.02},
                                               {"C", 10.0, 11.02},
                                               {"D", 15.0, 16.02}})};
    const auto model =
        fixed_dwell_model(cfg, {{"A", 1.02}, {"B", 1.02}, {"C", 1.02}, {"D", 1.02}});
    const auto r = run(cfg, trace, model);
    CHECK(r.plans_computed == 2);  // positions [1,2] then [3,4]
}

TEST_CASE("hits and misses add up to the delivered chunks") {
    auto cfg = toy_config();
    cfg.catalog.n_contents = 2;
    cfg.cache_capacity_chunks = 25;  // tight cache forces a mix of hits and recoveries
    std::vector<CarPath> trace;
    for (int i = 0; i < 20; ++i)
        trace.push_back(make_car("c" + std::to_string(i),
                                 {{"A", i * 1.0, i * 1.0 + 0.82},
                                  {"B", i * 1.0 + 2.0, i * 1.0 + 2.82}}));
    const auto model = fixed_dwell_model(cfg, {{"A", 0.82}, {"B", 0.82}});

    RunDebug dbg;
    dbg.record_deliveries = true;
    const auto r = run(cfg, trace, model, &dbg);
    long long delivered = 0;
    for (const auto& [car, seq] : dbg.deliveries) {
        delivered += static_cast<long long>(seq.size());
        for (std::size_t i = 0; i < seq.size(); ++i)
            CHECK(seq[i] == static_cast<long long>(i + 1));  // strict in-order, no gaps
    }
    CHECK(r.hits + r.misses == delivered);
    CHECK(r.delivered_bits == delivered * 520000);
    CHECK(r.hit_bits + r.miss_bits == r.delivered_bits);
}

TEST_CASE("everything prefetched and delivered once means zero overhead") {
    auto cfg = toy_config();
    cfg.catalog.chunks_per_content = 10;
    std::vector<CarPath> trace{make_car("c1", {{"A", 10.0, 11.02}})};
    const auto model = fixed_dwell_model(cfg, {{"A", 1.02}});
    const auto r = run(cfg, trace, model);
    REQUIRE(r.overhead.has_value());
    CHECK(*r.overhead == 0.0);
}

TEST_CASE("pure recovery with a unit window also balances to zero overhead") {
    auto cfg = toy_config();
    cfg.catalog.chunks_per_content = 10;
    cfg.taus = {1.0, 1.0};  // unreachable threshold: nothing is prefetched
    cfg.recovery_margin = 1;
    std::vector<CarPath> trace{make_car("c1", {{"A", 10.0, 11.4}})};
    std::map<std::string, std::vector<std::pair<double, double>>> mix{
        {"A", {{0.5, 0.5}, {1.02, 0.5}}}};
    const auto model = model_from_dwell_spec(mix, {}, cfg);
    const auto r = run(cfg, trace, model);
    CHECK(r.hits == 0);
    CHECK(r.misses == 10);
    CHECK(r.recovery_bits == 10 * 520000);  // each chunk fetched exactly once
    REQUIRE(r.overhead.has_value());
    CHECK(*r.overhead == 0.0);
    CHECK(r.backhaul_traffic_bps ==
          doctest::Approx(r.delivered_bits / r.covered_time_s));
}

TEST_CASE("the standard cache turns recovered chunks into later hits") {
    auto cfg = toy_config();
    cfg.catalog.chunks_per_content = 10;
    cfg.taus = {1.0, 1.0};  // force recovery for the first car
    std::vector<CarPath> trace{make_car("c1", {{"A", 0.0, 1.4}}),
                               make_car("c2", {{"A", 10.0, 11.4}})};
    std::map<std::string, std::vector<std::pair<double, double>>> mix{
        {"A", {{0.5, 0.5}, {1.02, 0.5}}}};
    const auto model = model_from_dwell_spec(mix, {}, cfg);

    const auto off = run(cfg, trace, model);
    CHECK(off.hits == 0);
    CHECK(off.misses == 20);

    cfg.standard_cache_enabled = true;
    const auto on = run(cfg, trace, model);
    // the second car is served from the first car's recoveries, and even the
    // first car hits on window chunks that landed ahead of its requests
    CHECK(on.hits >= 10);
    CHECK(on.hits + on.misses == 20);
    CHECK(on.recovery_bits < off.recovery_bits);
}

TEST_CASE("no chunk leaves the prefetch cache before its fetch completes") {
    auto cfg = toy_config();
    cfg.catalog.chunks_per_content = 10;
    std::vector<CarPath> trace{make_car("c1", {{"A", 10.0, 11.02}})};
    const auto model = fixed_dwell_model(cfg, {{"A", 1.02}});
    std::ostringstream log;
    run(cfg, trace, model, nullptr, &log);
    const std::string text = log.str();
    const auto first_land = text.find("PrefetchFetchComplete");
    const auto first_delivery = text.find("ChunkDelivered");
    REQUIRE(first_land != std::string::npos);
    REQUIRE(first_delivery != std::string::npos);
    CHECK(first_land < first_delivery);
}

TEST_CASE("a car referencing an EN missing from the model is rejected") {
    auto cfg = toy_config();
    std::vector<CarPath> trace{make_car("c1", {{"Z", 0.0, 1.0}})};
    const auto model = fixed_dwell_model(cfg, {{"A", 1.02}});
    CHECK_THROWS_AS(run(cfg, trace, model), DataError);
}

TEST_CASE("verbose event log lines name every event kind") {
    auto cfg = toy_config();
    std::vector<CarPath> trace{make_car("c1", {{"A", 10.0, 11.02}})};
    const auto model = fixed_dwell_model(cfg, {{"A", 1.02}});
    std::ostringstream log;
    run(cfg, trace, model, nullptr, &log);
    const std::string text = log.str();
    CHECK(text.find("CarEnter") != std::string::npos);
    CHECK(text.find("PlanComputed") != std::string::npos);
    CHECK(text.find("PrefetchFetchComplete") != std::string::npos);
    CHECK(text.find("ChunkDelivered") != std::string::npos);
    CHECK(text.find("CarExit") != std::string::npos);
}
