#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rich/trace.hpp"

namespace rich {

// Discrete mixture over real-valued dwell durations (seconds, probability).
struct DwellMixture {
    std::vector<std::pair<double, double>> points;

    void validate() const;
    double sample(double u01) const;
};

struct SyntheticPathSpec {
    std::vector<std::string> ens;
    double weight = 1.0;
};

struct SyntheticTraceSpec {
    std::vector<SyntheticPathSpec> paths;
    std::map<std::string, DwellMixture> dwell;  // per EN
    long n_cars = 0;
    double arrival_rate_hz = 1.0;  // mean car arrivals per second
    double inter_en_gap_s = 5.0;   // travel time between consecutive coverages

    void validate() const;
};

// Deterministic for a given (spec, seed). Cars are named car000001... in
// arrival order; each picks a path by weight and draws one dwell per EN.
std::vector<CarPath> generate_synthetic_trace(const SyntheticTraceSpec& spec, std::uint64_t seed);

}  // namespace rich
