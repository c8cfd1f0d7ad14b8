#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rich {

struct EnMetrics {
    std::string en_id;
    long long hits = 0;
    long long misses = 0;
    long long hit_bits = 0;
    long long miss_bits = 0;
    double covered_time_s = 0.0;      // union time with >=1 car under this EN
    double cache_throughput_bps = 0.0;
};

struct MetricsReport {
    std::string policy;
    long long cache_chunks = 0;
    double c_hat = 0.0;  // per-EN capacity / catalog size
    std::uint64_t seed = 0;

    long long hits = 0;
    long long misses = 0;
    double hit_probability = 0.0;
    double cache_throughput_bps = 0.0;   // hit bits over covered time
    double backhaul_traffic_bps = 0.0;   // miss-driven DataStore->EN bits over covered time
    std::optional<double> overhead;      // (DataStore->EN - delivered) / delivered; absent if
                                         // nothing was delivered
    double network_cache_occupancy = 0.0;  // time-avg of sum_i occupancy_i / catalog, in [0, N]
    double joint_utility = 0.0;

    double covered_time_s = 0.0;  // union time with >=1 car under >=1 EN
    long long delivered_bits = 0;
    long long hit_bits = 0;
    long long miss_bits = 0;
    long long prefetch_bits = 0;  // DataStore->EN, plan-driven (incl. static fills)
    long long recovery_bits = 0;  // DataStore->EN, miss-driven

    long long plans_computed = 0;
    long long inserts_rejected = 0;

    std::vector<EnMetrics> per_en;
};

double joint_utility(double hit_prob, double c_hat, double a_user, double b_op);

void write_metrics_csv_header(std::ostream& out);
void write_metrics_csv_row(const MetricsReport& r, std::ostream& out);
std::string metrics_to_json(const MetricsReport& r);

}  // namespace rich
