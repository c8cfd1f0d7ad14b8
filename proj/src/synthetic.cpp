#include "rich/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "rich/errors.hpp"
#include "rich/rng.hpp"

namespace rich {

void DwellMixture::validate() const {
    if (points.empty()) throw DataError("dwell mixture has no components");
    double mass = 0.0;
    for (const auto& [w, p] : points) {
        if (!(w > 0.0)) throw DataError("dwell mixture durations must be positive");
        if (!(p >= 0.0)) throw DataError("dwell mixture probabilities must be >= 0");
        mass += p;
    }
    if (std::abs(mass - 1.0) > 1e-9) throw DataError("dwell mixture probabilities must sum to 1");
}

double DwellMixture::sample(double u01) const {
    double acc = 0.0;
    for (const auto& [w, p] : points) {
        acc += p;
        if (u01 < acc) return w;
    }
    return points.back().first;
}

void SyntheticTraceSpec::validate() const {
    if (n_cars < 1) throw DataError("synthetic trace needs at least one car");
    if (paths.empty()) throw DataError("synthetic trace needs at least one path");
    if (!(arrival_rate_hz > 0.0)) throw DataError("arrival rate must be positive");
    if (!(inter_en_gap_s >= 0.0)) throw DataError("inter-EN gap must be >= 0");
    double total_weight = 0.0;
    for (const auto& p : paths) {
        if (p.ens.empty()) throw DataError("synthetic path has an empty EN sequence");
        if (!(p.weight > 0.0)) throw DataError("synthetic path weight must be positive");
        total_weight += p.weight;
        for (const auto& en : p.ens) {
            auto it = dwell.find(en);
            if (it == dwell.end())
                throw DataError("no dwell mixture given for EN '" + en + "'");
            it->second.validate();
        }
    }
    if (!(total_weight > 0.0)) throw DataError("path weights must sum to a positive value");
}

std::vector<CarPath> generate_synthetic_trace(const SyntheticTraceSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(Rng::derive(seed, "synthetic-trace"));

    double weight_total = 0.0;
    for (const auto& p : spec.paths) weight_total += p.weight;

    std::vector<CarPath> out;
    out.reserve(static_cast<std::size_t>(spec.n_cars));
    double arrival = 0.0;
    char name[32];
    for (long c = 0; c < spec.n_cars; ++c) {
        arrival += rng.exponential(spec.arrival_rate_hz);

        // pick a path by weight
        double pick = rng.uniform01() * weight_total;
        std::size_t pi = 0;
        for (; pi + 1 < spec.paths.size(); ++pi) {
            pick -= spec.paths[pi].weight;
            if (pick < 0.0) break;
        }
        const auto& path = spec.paths[pi];

        std::snprintf(name, sizeof(name), "car%06ld", c + 1);
        CarPath cp;
        cp.car_id = name;
        double t = arrival;
        for (const auto& en : path.ens) {
            const double dwell = spec.dwell.at(en).sample(rng.uniform01());
            cp.en_sequence.push_back(en);
            cp.events.push_back({cp.car_id, en, t, t + dwell});
            t += dwell + spec.inter_en_gap_s;
        }
        out.push_back(std::move(cp));
    }
    return out;
}

}  // namespace rich
