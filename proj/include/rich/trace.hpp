#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rich/discrete_pdf.hpp"

namespace rich {

// One maximal interval a car spends under one EN's coverage. The canonical
// mobility input; everything else is derived from lists of these.
struct CoverageEvent {
    std::string car_id;
    std::string en_id;
    double t_enter = 0.0;
    double t_exit = 0.0;
};

struct CarPath {
    std::string car_id;
    std::vector<std::string> en_sequence;  // projection of events in time order
    std::vector<CoverageEvent> events;
};

struct DwellStats {
    std::string en_id;
    DiscretePdf dwell_pdf;  // over bin indices; seconds = index * bin_width
    double bin_width = 1.0;
    long sample_count = 0;
    double mean_dwell_s = 0.0;
    double skewness = 0.0;   // 0 when the sample is degenerate
    double kurtosis = 0.0;   // plain (non-excess); 0 when degenerate
    double avg_concurrent_users = 0.0;
    long fast_count = 0;     // dwell <= boundary
    long slow_count = 0;
    std::optional<DiscretePdf> fast_pdf;
    std::optional<DiscretePdf> slow_pdf;
};

struct SignificantPath {
    std::vector<std::string> en_sequence;
    long car_count = 0;
};

struct PositionSample {
    double t = 0.0;
    std::string car_id;
    double x = 0.0;
    double y = 0.0;
};

struct EnSite {
    std::string en_id;
    double x = 0.0;
    double y = 0.0;
    double radius = 0.0;  // meters
};

// CSV schema: header car_id,en_id,t_enter,t_exit. Returned grouped per car
// (cars in first-appearance order) and time-sorted within each car.
// Throws DataError with a line number on malformed rows, non-positive
// dwell, or overlapping intervals for one car.
std::vector<CoverageEvent> load_coverage_events(std::istream& in);
void write_coverage_events(std::span<const CoverageEvent> events, std::ostream& out);

// CSV schema: header t,car_id,x,y and en_id,x,y,radius respectively.
std::vector<PositionSample> load_position_samples(std::istream& in);
std::vector<EnSite> load_en_layout(std::istream& in);

// One CoverageEvent per maximal run of samples within an EN's disc;
// enter/exit are the run's first/last sample times (no interpolation), so
// single-sample grazes are dropped. Errors if a car's samples are unsorted
// or a sample falls inside two discs at once.
std::vector<CoverageEvent> derive_coverage_from_positions(std::span<const PositionSample> positions,
                                                          std::span<const EnSite> layout);

// Group a flat event list per car (validating disjointness) and derive the
// EN sequences.
std::vector<CarPath> group_into_paths(std::span<const CoverageEvent> events);
std::vector<CoverageEvent> flatten_paths(std::span<const CarPath> paths);

DwellStats empirical_dwell_dist(std::span<const CoverageEvent> events, const std::string& en_id,
                                double bin_width = 1.0, double fast_slow_boundary = 10.0);

// Time-average of the instantaneous car count under en_id, conditioned on
// at least one car being present.
double avg_concurrent_users(std::span<const CoverageEvent> events, const std::string& en_id);

// Distinct full EN sequences of exactly path_len ENs traversed by at least
// min_cars cars, most-traveled first (ties by sequence).
std::vector<SignificantPath> significant_paths(std::span<const CarPath> paths, int path_len,
                                               long min_cars);

// All EN ids referenced by a trace, sorted.
std::vector<std::string> en_ids_in(std::span<const CarPath> paths);

}  // namespace rich
