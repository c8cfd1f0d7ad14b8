#include "rich/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <nlohmann/json.hpp>

#include "rich/errors.hpp"

namespace rich {

double joint_utility(double hit_prob, double c_hat, double a_user, double b_op) {
    if (!(a_user > 0.0) || !(b_op > 0.0)) throw UsageError("utility constants must be positive");
    return std::exp(-a_user * (1.0 - hit_prob)) * std::exp(-b_op * c_hat);
}

void write_metrics_csv_header(std::ostream& out) {
    out << "policy,cache_chunks,c_hat,hit_prob,cache_throughput_bps,backhaul_bps,overhead,"
           "occupancy,utility,seed\n";
}

namespace {
std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}
}  // namespace

void write_metrics_csv_row(const MetricsReport& r, std::ostream& out) {
    out << r.policy << ',' << r.cache_chunks << ',' << fmt(r.c_hat) << ','
        << fmt(r.hit_probability) << ',' << fmt(r.cache_throughput_bps) << ','
        << fmt(r.backhaul_traffic_bps) << ',' << (r.overhead ? fmt(*r.overhead) : std::string())
        << ',' << fmt(r.network_cache_occupancy) << ',' << fmt(r.joint_utility) << ',' << r.seed
        << '\n';
}

std::string metrics_to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["policy"] = r.policy;
    j["cache_chunks"] = r.cache_chunks;
    j["c_hat"] = r.c_hat;
    j["hit_prob"] = r.hit_probability;
    j["cache_throughput_bps"] = r.cache_throughput_bps;
    j["backhaul_bps"] = r.backhaul_traffic_bps;
    if (r.overhead)
        j["overhead"] = *r.overhead;
    else
        j["overhead"] = nullptr;
    j["occupancy"] = r.network_cache_occupancy;
    j["utility"] = r.joint_utility;
    j["seed"] = r.seed;
    j["hits"] = r.hits;
    j["misses"] = r.misses;
    j["covered_time_s"] = r.covered_time_s;
    j["delivered_bits"] = r.delivered_bits;
    j["hit_bits"] = r.hit_bits;
    j["miss_bits"] = r.miss_bits;
    j["prefetch_bits"] = r.prefetch_bits;
    j["recovery_bits"] = r.recovery_bits;
    j["plans_computed"] = r.plans_computed;
    j["inserts_rejected"] = r.inserts_rejected;
    auto per_en = nlohmann::ordered_json::array();
    for (const auto& e : r.per_en) {
        nlohmann::ordered_json je;
        je["en_id"] = e.en_id;
        je["hits"] = e.hits;
        je["misses"] = e.misses;
        je["hit_bits"] = e.hit_bits;
        je["miss_bits"] = e.miss_bits;
        je["covered_time_s"] = e.covered_time_s;
        je["cache_throughput_bps"] = e.cache_throughput_bps;
        per_en.push_back(std::move(je));
    }
    j["per_en"] = std::move(per_en);
    return j.dump(2);
}

}  // namespace rich
