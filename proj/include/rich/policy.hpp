#pragma once

#include <span>
#include <string>
#include <vector>

#include "rich/probmodel.hpp"

namespace rich {

// Where to prefetch each chunk of one content for one car path, plus the
// probability the chosen ENs jointly deliver it.
struct PrefetchPlan {
    std::string car_id;
    std::string content_id;
    int horizon = 0;   // number of EN positions covered
    int n_chunks = 0;
    std::vector<std::vector<int>> assignments;  // [k-1] -> EN positions, ascending
    std::vector<double> achieved_prob;          // [k-1] -> p_k

    const std::vector<int>& ens_for(int chunk) const {
        return assignments[static_cast<std::size_t>(chunk - 1)];
    }
    double prob_for(int chunk) const { return achieved_prob[static_cast<std::size_t>(chunk - 1)]; }
};

// Per-EN thresholds plus the owner map deciding which EN's threshold
// governs each chunk (the EN where that chunk is most likely downloaded).
struct ThresholdProfile {
    std::vector<double> taus;      // one per EN position
    std::vector<int> chunk_owner;  // [k-1] -> EN position (0-based)
};

// owner(k) = smallest EN index maximizing phi_i(k); all-zero columns fall
// to the last EN (and never get copies anyway).
std::vector<int> assign_chunk_owners(const PhiMatrix& phi);

ThresholdProfile make_threshold_profile(const PhiMatrix& phi, std::vector<double> taus);
ThresholdProfile uniform_threshold_profile(const PhiMatrix& phi, double tau);

// Greedy threshold prefetch: per chunk, add ENs in descending-phi order
// until the accumulated probability exceeds the owner's threshold. If the
// candidates run out below the threshold the chunk gets no copies (unless
// keep_partial_on_failure).
PrefetchPlan rich_plan(const PhiMatrix& phi, const ThresholdProfile& profile,
                       bool keep_partial_on_failure = false);

// Popularity baseline: the same static set at every EN; whole contents in
// rank order, then the leading chunks of the first content that no longer
// fits.
struct PopSlice {
    int content = 0;
    long long n_chunks = 0;  // chunks 1..n_chunks of this content
};
std::vector<PopSlice> pop_plan(std::span<const int> ranked_contents, long long chunks_per_content,
                               long long capacity_chunks);

// Mean-based baseline: EN i stores the contiguous range whose width is its
// rounded expected chunk count, continuing where EN i-1 stopped.
struct ChunkRange {
    long long first = 1;
    long long last = 0;  // inclusive; empty when last < first
    bool empty() const { return last < first; }
};
std::vector<ChunkRange> netpredict_plan(std::span<const double> mean_chunks, long long start_chunk);

// True exactly when the next EN position lies outside the current plan.
bool refresh_needed(int next_position, int plan_first_position, int horizon);

std::string plan_to_json(const PrefetchPlan& plan);

}  // namespace rich
