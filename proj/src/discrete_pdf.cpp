#include "rich/discrete_pdf.hpp"

#include <algorithm>
#include <cmath>

#include "rich/errors.hpp"

namespace rich {

namespace {
constexpr double kMassTolerance = 1e-9;
}

DiscretePdf::DiscretePdf(std::vector<double> probs) : probs_(std::move(probs)) {
    trim();
    validate();
}

DiscretePdf DiscretePdf::unchecked(std::vector<double> probs) {
    DiscretePdf pdf;
    pdf.probs_ = std::move(probs);
    pdf.trim();
    return pdf;
}

DiscretePdf DiscretePdf::point_mass(int value) {
    if (value < 0) throw DataError("point_mass: negative support value");
    std::vector<double> p(static_cast<std::size_t>(value) + 1, 0.0);
    p.back() = 1.0;
    return unchecked(std::move(p));
}

DiscretePdf DiscretePdf::from_pairs(std::span<const std::pair<int, double>> value_probs) {
    int max_v = 0;
    for (const auto& [v, p] : value_probs) {
        if (v < 0) throw DataError("pdf support value must be non-negative");
        max_v = std::max(max_v, v);
    }
    std::vector<double> probs(static_cast<std::size_t>(max_v) + 1, 0.0);
    for (const auto& [v, p] : value_probs) probs[static_cast<std::size_t>(v)] += p;
    return DiscretePdf(std::move(probs));
}

DiscretePdf DiscretePdf::from_samples(std::span<const double> samples, double bin_width) {
    if (samples.empty()) throw DataError("cannot build a pdf from zero samples");
    if (bin_width <= 0.0) throw UsageError("bin_width must be positive");
    std::vector<double> counts;
    for (double x : samples) {
        if (x < 0.0) throw DataError("negative sample in pdf input");
        auto bin = static_cast<std::size_t>(std::floor(x / bin_width));
        if (counts.size() <= bin) counts.resize(bin + 1, 0.0);
        counts[bin] += 1.0;
    }
    const double n = static_cast<double>(samples.size());
    for (double& c : counts) c /= n;
    return DiscretePdf(std::move(counts));
}

void DiscretePdf::trim() {
    while (!probs_.empty() && probs_.back() == 0.0) probs_.pop_back();
}

void DiscretePdf::validate() const {
    if (probs_.empty()) throw DataError("pdf has empty support");
    for (double p : probs_) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw DataError("pdf has a negative or non-finite probability");
    }
    const double m = mass();
    if (std::abs(m - 1.0) > kMassTolerance)
        throw DataError("pdf mass is " + std::to_string(m) + ", expected 1");
}

double DiscretePdf::mass() const {
    double s = 0.0;
    for (double p : probs_) s += p;
    return s;
}

double DiscretePdf::mean() const {
    double m = 0.0;
    for (std::size_t v = 0; v < probs_.size(); ++v) m += static_cast<double>(v) * probs_[v];
    return m;
}

double DiscretePdf::variance() const {
    const double mu = mean();
    double s = 0.0;
    for (std::size_t v = 0; v < probs_.size(); ++v) {
        const double d = static_cast<double>(v) - mu;
        s += d * d * probs_[v];
    }
    return s;
}

double DiscretePdf::ccdf(int v) const {
    if (v <= 0) return mass();
    double s = 0.0;
    for (std::size_t i = probs_.size(); i-- > static_cast<std::size_t>(v);) s += probs_[i];
    return (v > max_value()) ? 0.0 : s;
}

std::vector<double> DiscretePdf::ccdf_table() const {
    std::vector<double> table(probs_.size() + 1, 0.0);
    for (std::size_t v = probs_.size(); v-- > 0;) table[v] = table[v + 1] + probs_[v];
    return table;
}

DiscretePdf DiscretePdf::convolve(const DiscretePdf& other, int max_value_cap) const {
    if (empty() || other.empty()) throw DataError("convolve: empty pdf");
    int out_max = max_value() + other.max_value();
    if (max_value_cap >= 0) out_max = std::min(out_max, max_value_cap);
    std::vector<double> out(static_cast<std::size_t>(out_max) + 1, 0.0);
    for (std::size_t a = 0; a < probs_.size(); ++a) {
        if (probs_[a] == 0.0) continue;
        const std::size_t b_max =
            std::min(other.probs_.size(), static_cast<std::size_t>(out_max) - a + 1);
        for (std::size_t b = 0; b < b_max; ++b) {
            out[a + b] += probs_[a] * other.probs_[b];
        }
    }
    return unchecked(std::move(out));
}

DiscretePdf DiscretePdf::truncated(long long capacity) const {
    if (capacity < 0) throw UsageError("cache capacity must be >= 0");
    if (empty()) throw DataError("truncated: empty pdf");
    if (capacity >= max_value()) return *this;
    const auto cap = static_cast<std::size_t>(capacity);
    std::vector<double> out(cap + 1, 0.0);
    for (std::size_t v = 0; v < cap; ++v) out[v] = probs_[v];
    double tail = 0.0;  // suffix sum keeps total mass intact
    for (std::size_t v = probs_.size(); v-- > cap;) tail += probs_[v];
    out[cap] = tail;
    return unchecked(std::move(out));
}

DiscretePdf DiscretePdf::map_values(const std::function<long long(int)>& fn) const {
    if (empty()) throw DataError("map_values: empty pdf");
    std::vector<double> out;
    for (std::size_t v = 0; v < probs_.size(); ++v) {
        if (probs_[v] == 0.0) continue;
        const long long image = fn(static_cast<int>(v));
        if (image < 0) throw DataError("map_values: image must be non-negative");
        const auto idx = static_cast<std::size_t>(image);
        if (out.size() <= idx) out.resize(idx + 1, 0.0);
        out[idx] += probs_[v];
    }
    return unchecked(std::move(out));
}

int DiscretePdf::quantile(double u) const {
    double acc = 0.0;
    for (std::size_t v = 0; v < probs_.size(); ++v) {
        acc += probs_[v];
        if (u < acc) return static_cast<int>(v);
    }
    return max_value();
}

}  // namespace rich
