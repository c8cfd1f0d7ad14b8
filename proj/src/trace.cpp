#include "rich/trace.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "rich/errors.hpp"

namespace rich {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, long line_no, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": bad " + what + " value '" + s + "'");
    }
}

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

// shared loader skeleton: header check + per-line field split
template <typename Fn>
void for_each_csv_row(std::istream& in, const char* expected_header, std::size_t n_fields, Fn&& fn) {
    std::string line;
    long line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        if (!header_seen) {
            header_seen = true;
            std::string stripped;
            for (char c : line)
                if (c != '\r' && c != ' ') stripped.push_back(c);
            if (stripped != expected_header)
                throw DataError("line 1: expected header '" + std::string(expected_header) + "'");
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != n_fields)
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(n_fields) + " fields, got " +
                            std::to_string(fields.size()));
        fn(fields, line_no);
    }
    if (!header_seen) throw DataError("empty input: missing CSV header");
}

}  // namespace

std::vector<CoverageEvent> load_coverage_events(std::istream& in) {
    std::vector<CoverageEvent> raw;
    for_each_csv_row(in, "car_id,en_id,t_enter,t_exit", 4,
                     [&](const std::vector<std::string>& f, long line_no) {
                         CoverageEvent ev;
                         ev.car_id = f[0];
                         ev.en_id = f[1];
                         ev.t_enter = parse_double(f[2], line_no, "t_enter");
                         ev.t_exit = parse_double(f[3], line_no, "t_exit");
                         if (ev.car_id.empty() || ev.en_id.empty())
                             throw DataError("line " + std::to_string(line_no) + ": empty id");
                         if (!(ev.t_exit > ev.t_enter))
                             throw DataError("line " + std::to_string(line_no) +
                                             ": t_exit must be greater than t_enter");
                         raw.push_back(std::move(ev));
                     });
    // group per car in first-appearance order, sort each car by t_enter
    auto paths = group_into_paths(raw);
    return flatten_paths(paths);
}

void write_coverage_events(std::span<const CoverageEvent> events, std::ostream& out) {
    out << "car_id,en_id,t_enter,t_exit\n";
    char buf[160];
    for (const auto& ev : events) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.9g,%.9g\n", ev.car_id.c_str(), ev.en_id.c_str(),
                      ev.t_enter, ev.t_exit);
        out << buf;
    }
}

std::vector<PositionSample> load_position_samples(std::istream& in) {
    std::vector<PositionSample> out;
    for_each_csv_row(in, "t,car_id,x,y", 4, [&](const std::vector<std::string>& f, long line_no) {
        PositionSample s;
        s.t = parse_double(f[0], line_no, "t");
        s.car_id = f[1];
        s.x = parse_double(f[2], line_no, "x");
        s.y = parse_double(f[3], line_no, "y");
        if (s.car_id.empty()) throw DataError("line " + std::to_string(line_no) + ": empty car_id");
        out.push_back(std::move(s));
    });
    return out;
}

std::vector<EnSite> load_en_layout(std::istream& in) {
    std::vector<EnSite> out;
    for_each_csv_row(in, "en_id,x,y,radius", 4,
                     [&](const std::vector<std::string>& f, long line_no) {
                         EnSite s;
                         s.en_id = f[0];
                         s.x = parse_double(f[1], line_no, "x");
                         s.y = parse_double(f[2], line_no, "y");
                         s.radius = parse_double(f[3], line_no, "radius");
                         if (s.en_id.empty())
                             throw DataError("line " + std::to_string(line_no) + ": empty en_id");
                         if (!(s.radius > 0.0))
                             throw DataError("line " + std::to_string(line_no) +
                                             ": radius must be positive");
                         out.push_back(std::move(s));
                     });
    return out;
}

std::vector<CoverageEvent> derive_coverage_from_positions(std::span<const PositionSample> positions,
                                                          std::span<const EnSite> layout) {
    // bucket samples per car, preserving input order (which must be time-sorted)
    std::vector<std::string> car_order;
    std::map<std::string, std::vector<const PositionSample*>> per_car;
    for (const auto& s : positions) {
        auto [it, inserted] = per_car.try_emplace(s.car_id);
        if (inserted) car_order.push_back(s.car_id);
        it->second.push_back(&s);
    }

    std::vector<CoverageEvent> events;
    for (const auto& car : car_order) {
        const auto& samples = per_car[car];
        for (std::size_t i = 1; i < samples.size(); ++i) {
            if (samples[i]->t < samples[i - 1]->t)
                throw DataError("position samples for car '" + car + "' are not time-sorted");
        }
        // which disc (if any) contains each sample; two at once is an error
        std::vector<int> disc(samples.size(), -1);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            for (std::size_t e = 0; e < layout.size(); ++e) {
                const double dx = samples[i]->x - layout[e].x;
                const double dy = samples[i]->y - layout[e].y;
                if (std::hypot(dx, dy) <= layout[e].radius) {
                    if (disc[i] >= 0)
                        throw DataError("car '" + car + "' is inside two EN discs at t=" +
                                        std::to_string(samples[i]->t) +
                                        " (coverage areas must not overlap)");
                    disc[i] = static_cast<int>(e);
                }
            }
        }
        // maximal runs of the same disc id
        std::size_t i = 0;
        while (i < samples.size()) {
            if (disc[i] < 0) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j + 1 < samples.size() && disc[j + 1] == disc[i]) ++j;
            if (samples[j]->t > samples[i]->t) {  // single-sample grazes have no duration
                events.push_back({car, layout[static_cast<std::size_t>(disc[i])].en_id,
                                  samples[i]->t, samples[j]->t});
            }
            i = j + 1;
        }
    }
    auto paths = group_into_paths(events);
    return flatten_paths(paths);
}

std::vector<CarPath> group_into_paths(std::span<const CoverageEvent> events) {
    std::vector<std::string> car_order;
    std::map<std::string, CarPath> by_car;
    for (const auto& ev : events) {
        auto [it, inserted] = by_car.try_emplace(ev.car_id);
        if (inserted) {
            it->second.car_id = ev.car_id;
            car_order.push_back(ev.car_id);
        }
        it->second.events.push_back(ev);
    }

    std::vector<CarPath> paths;
    paths.reserve(car_order.size());
    for (const auto& car : car_order) {
        CarPath& p = by_car[car];
        std::stable_sort(p.events.begin(), p.events.end(),
                         [](const CoverageEvent& a, const CoverageEvent& b) {
                             return a.t_enter < b.t_enter;
                         });
        for (std::size_t i = 0; i < p.events.size(); ++i) {
            if (!(p.events[i].t_exit > p.events[i].t_enter))
                throw DataError("car '" + car + "': t_exit must be greater than t_enter");
            if (i > 0 && p.events[i].t_enter < p.events[i - 1].t_exit)
                throw DataError("car '" + car + "': overlapping coverage intervals at t=" +
                                std::to_string(p.events[i].t_enter));
            p.en_sequence.push_back(p.events[i].en_id);
        }
        paths.push_back(std::move(p));
    }
    return paths;
}

std::vector<CoverageEvent> flatten_paths(std::span<const CarPath> paths) {
    std::vector<CoverageEvent> events;
    for (const auto& p : paths) events.insert(events.end(), p.events.begin(), p.events.end());
    return events;
}

DwellStats empirical_dwell_dist(std::span<const CoverageEvent> events, const std::string& en_id,
                                double bin_width, double fast_slow_boundary) {
    if (bin_width <= 0.0) throw UsageError("bin_width must be positive");
    std::vector<double> dwells;
    std::vector<double> fast, slow;
    for (const auto& ev : events) {
        if (ev.en_id != en_id) continue;
        const double w = ev.t_exit - ev.t_enter;
        dwells.push_back(w);
        (w > fast_slow_boundary ? slow : fast).push_back(w);
    }
    if (dwells.empty()) throw DataError("no coverage events for EN '" + en_id + "'");

    DwellStats st;
    st.en_id = en_id;
    st.bin_width = bin_width;
    st.sample_count = static_cast<long>(dwells.size());
    st.dwell_pdf = DiscretePdf::from_samples(dwells, bin_width);
    st.fast_count = static_cast<long>(fast.size());
    st.slow_count = static_cast<long>(slow.size());
    if (!fast.empty()) st.fast_pdf = DiscretePdf::from_samples(fast, bin_width);
    if (!slow.empty()) st.slow_pdf = DiscretePdf::from_samples(slow, bin_width);

    double mean = 0.0;
    for (double w : dwells) mean += w;
    mean /= static_cast<double>(dwells.size());
    st.mean_dwell_s = mean;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double w : dwells) {
        const double d = w - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    const double n = static_cast<double>(dwells.size());
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
        st.skewness = m3 / std::pow(m2, 1.5);
        st.kurtosis = m4 / (m2 * m2);
    }  // degenerate samples keep the 0 defaults

    st.avg_concurrent_users = avg_concurrent_users(events, en_id);
    return st;
}

double avg_concurrent_users(std::span<const CoverageEvent> events, const std::string& en_id) {
    // sweep over +1/-1 boundaries; integrate the count over occupied time only
    std::vector<std::pair<double, int>> edges;
    for (const auto& ev : events) {
        if (ev.en_id != en_id) continue;
        edges.emplace_back(ev.t_enter, +1);
        edges.emplace_back(ev.t_exit, -1);
    }
    if (edges.empty()) throw DataError("no coverage events for EN '" + en_id + "'");
    std::sort(edges.begin(), edges.end());

    double occupied = 0.0, weighted = 0.0;
    int count = 0;
    double prev_t = edges.front().first;
    for (const auto& [t, delta] : edges) {
        if (count >= 1) {
            occupied += t - prev_t;
            weighted += static_cast<double>(count) * (t - prev_t);
        }
        prev_t = t;
        count += delta;
    }
    return (occupied > 0.0) ? weighted / occupied : 1.0;
}

std::vector<SignificantPath> significant_paths(std::span<const CarPath> paths, int path_len,
                                               long min_cars) {
    if (path_len < 1) throw UsageError("path_len must be >= 1");
    std::map<std::vector<std::string>, long> counts;
    for (const auto& p : paths) {
        if (static_cast<int>(p.en_sequence.size()) == path_len) counts[p.en_sequence] += 1;
    }
    std::vector<SignificantPath> out;
    for (const auto& [seq, cnt] : counts) {
        if (cnt >= min_cars) out.push_back({seq, cnt});
    }
    std::sort(out.begin(), out.end(), [](const SignificantPath& a, const SignificantPath& b) {
        if (a.car_count != b.car_count) return a.car_count > b.car_count;
        return a.en_sequence < b.en_sequence;
    });
    return out;
}

std::vector<std::string> en_ids_in(std::span<const CarPath> paths) {
    std::set<std::string> ids;
    for (const auto& p : paths)
        for (const auto& en : p.en_sequence) ids.insert(en);
    return {ids.begin(), ids.end()};
}

}  // namespace rich
