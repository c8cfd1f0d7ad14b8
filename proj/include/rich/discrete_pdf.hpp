#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace rich {

// Probability mass function over non-negative integers with finite support,
// stored densely from value 0. Total mass must be 1 within 1e-9.
class DiscretePdf {
public:
    DiscretePdf() = default;

    // Takes probs[v] = P(X = v). Throws DataError on negative entries or
    // mass off by more than the tolerance.
    explicit DiscretePdf(std::vector<double> probs);

    static DiscretePdf point_mass(int value);
    // Accumulates duplicate values.
    static DiscretePdf from_pairs(std::span<const std::pair<int, double>> value_probs);
    // Normalized histogram of floor(x / bin_width).
    static DiscretePdf from_samples(std::span<const double> samples, double bin_width = 1.0);

    bool empty() const { return probs_.empty(); }
    int max_value() const { return static_cast<int>(probs_.size()) - 1; }
    double at(int v) const {
        return (v < 0 || v > max_value()) ? 0.0 : probs_[static_cast<std::size_t>(v)];
    }
    const std::vector<double>& probs() const { return probs_; }

    double mass() const;
    double mean() const;
    double variance() const;

    // P(X >= v). v <= 0 gives total mass.
    double ccdf(int v) const;
    // table[v] = P(X >= v) for v in [0, max_value()+1]; computed by suffix
    // summation so partial sums are consistent with mass().
    std::vector<double> ccdf_table() const;

    // Exact discrete convolution (law of the sum of independents). If
    // max_value_cap >= 0, values above the cap are dropped (not folded); the
    // result then carries mass < 1 and is only meant for internal use.
    DiscretePdf convolve(const DiscretePdf& other, int max_value_cap = -1) const;

    // Cache-capped law: identical below capacity, all tail mass collapses
    // onto the capacity value.
    DiscretePdf truncated(long long capacity) const;

    // Pushforward through a value map; masses on equal images merge.
    DiscretePdf map_values(const std::function<long long(int)>& fn) const;

    // Inverse-CDF sampling; u in [0,1).
    int quantile(double u) const;

private:
    std::vector<double> probs_;

    void trim();
    void validate() const;
    static DiscretePdf unchecked(std::vector<double> probs);
};

}  // namespace rich
