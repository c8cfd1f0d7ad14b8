#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rich/errors.hpp"
#include "rich/metrics.hpp"

using namespace rich;

TEST_CASE("joint utility endpoints and shape") {
    CHECK(joint_utility(1.0, 0.0, 1.0, 1.0) == 1.0);
    CHECK(joint_utility(0.0, 1.0, 1.0, 1.0) == doctest::Approx(std::exp(-2.0)));
    // strictly increasing in the hit probability at fixed cache size
    double prev = -1.0;
    for (double hit = 0.0; hit <= 1.0; hit += 0.1) {
        const double u = joint_utility(hit, 0.4, 1.0, 1.0);
        CHECK(u > prev);
        prev = u;
    }
    CHECK_THROWS_AS(joint_utility(0.5, 0.5, 0.0, 1.0), UsageError);
}

TEST_CASE("csv row carries the pinned schema") {
    MetricsReport r;
    r.policy = "rich";
    r.cache_chunks = 260;
    r.c_hat = 0.01;
    r.hit_probability = 0.5;
    r.cache_throughput_bps = 1e6;
    r.backhaul_traffic_bps = 2e6;
    r.overhead = -0.25;
    r.network_cache_occupancy = 0.7;
    r.joint_utility = 0.3;
    r.seed = 42;

    std::ostringstream out;
    write_metrics_csv_header(out);
    write_metrics_csv_row(r, out);
    const std::string text = out.str();
    CHECK(text.find("policy,cache_chunks,c_hat,hit_prob,cache_throughput_bps,backhaul_bps,"
                    "overhead,occupancy,utility,seed") == 0);
    CHECK(text.find("rich,260,0.01,0.5,1000000,2000000,-0.25,0.7,0.3,42") != std::string::npos);
}

TEST_CASE("undefined overhead stays empty in csv and null in json") {
    MetricsReport r;
    r.policy = "pop";
    std::ostringstream out;
    write_metrics_csv_row(r, out);
    CHECK(out.str().find(",,") != std::string::npos);
    const std::string j = metrics_to_json(r);
    CHECK(j.find("\"overhead\": null") != std::string::npos);
}
