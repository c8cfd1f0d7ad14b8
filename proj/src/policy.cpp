#include "rich/policy.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "rich/errors.hpp"

namespace rich {

namespace {
// success margin for the threshold check after candidates run out; column
// sums hit thresholds like 1.0 only to floating point
constexpr double kTauSlack = 1e-9;
}

std::vector<int> assign_chunk_owners(const PhiMatrix& phi) {
    std::vector<int> owners(static_cast<std::size_t>(phi.n_chunks), phi.n_ens - 1);
    for (int k = 1; k <= phi.n_chunks; ++k) {
        double best = 0.0;
        int owner = phi.n_ens - 1;  // all-zero columns default to the last EN
        for (int i = 0; i < phi.n_ens; ++i) {
            const double v = phi.at(i, k);
            if (v > best) {  // strict: ties go to the earlier EN
                best = v;
                owner = i;
            }
        }
        owners[static_cast<std::size_t>(k - 1)] = owner;
    }
    return owners;
}

ThresholdProfile make_threshold_profile(const PhiMatrix& phi, std::vector<double> taus) {
    if (static_cast<int>(taus.size()) != phi.n_ens)
        throw UsageError("threshold profile needs one tau per EN");
    for (double t : taus) {
        if (!(t >= 0.0 && t <= 1.0)) throw UsageError("thresholds must lie in [0,1]");
    }
    return ThresholdProfile{std::move(taus), assign_chunk_owners(phi)};
}

ThresholdProfile uniform_threshold_profile(const PhiMatrix& phi, double tau) {
    return make_threshold_profile(phi, std::vector<double>(static_cast<std::size_t>(phi.n_ens), tau));
}

PrefetchPlan rich_plan(const PhiMatrix& phi, const ThresholdProfile& profile,
                       bool keep_partial_on_failure) {
    if (static_cast<int>(profile.taus.size()) != phi.n_ens ||
        static_cast<int>(profile.chunk_owner.size()) != phi.n_chunks)
        throw UsageError("threshold profile does not match the phi matrix");

    PrefetchPlan plan;
    plan.horizon = phi.n_ens;
    plan.n_chunks = phi.n_chunks;
    plan.assignments.resize(static_cast<std::size_t>(phi.n_chunks));
    plan.achieved_prob.assign(static_cast<std::size_t>(phi.n_chunks), 0.0);

    std::vector<std::pair<double, int>> candidates;
    for (int k = 1; k <= phi.n_chunks; ++k) {
        candidates.clear();
        for (int i = 0; i < phi.n_ens; ++i) {
            const double v = phi.at(i, k);
            if (v > 0.0) candidates.emplace_back(v, i);
        }
        // descending probability, earlier EN on ties
        std::sort(candidates.begin(), candidates.end(),
                  [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                  });

        const double tau = profile.taus[static_cast<std::size_t>(
            profile.chunk_owner[static_cast<std::size_t>(k - 1)])];
        double p_k = 0.0;
        auto& chosen = plan.assignments[static_cast<std::size_t>(k - 1)];
        for (const auto& [v, i] : candidates) {
            if (p_k > tau) break;
            p_k += v;
            chosen.push_back(i);
        }
        if (p_k < tau - kTauSlack && !keep_partial_on_failure) {
            chosen.clear();  // no EN set can satisfy the threshold: store nothing
            p_k = 0.0;
        }
        std::sort(chosen.begin(), chosen.end());
        plan.achieved_prob[static_cast<std::size_t>(k - 1)] = p_k;
    }
    return plan;
}

std::vector<PopSlice> pop_plan(std::span<const int> ranked_contents, long long chunks_per_content,
                               long long capacity_chunks) {
    if (chunks_per_content < 1) throw UsageError("chunks_per_content must be >= 1");
    if (capacity_chunks < 0) throw UsageError("capacity must be >= 0");
    std::vector<PopSlice> out;
    long long left = capacity_chunks;
    for (int content : ranked_contents) {
        if (left <= 0) break;
        const long long take = std::min(left, chunks_per_content);
        out.push_back({content, take});
        left -= take;
    }
    return out;
}

std::vector<ChunkRange> netpredict_plan(std::span<const double> mean_chunks, long long start_chunk) {
    if (start_chunk < 1) throw UsageError("start_chunk must be >= 1");
    std::vector<ChunkRange> out;
    out.reserve(mean_chunks.size());
    long long cursor = start_chunk - 1;
    for (double m : mean_chunks) {
        if (!(m >= 0.0)) throw UsageError("mean chunk counts must be >= 0");
        const long long width = static_cast<long long>(std::floor(m + 0.5));  // round half up
        out.push_back({cursor + 1, cursor + width});
        cursor += width;
    }
    return out;
}

bool refresh_needed(int next_position, int plan_first_position, int horizon) {
    if (horizon < 1) throw UsageError("plan horizon must be >= 1");
    return next_position > plan_first_position + horizon - 1;
}

std::string plan_to_json(const PrefetchPlan& plan) {
    nlohmann::ordered_json j;
    j["car_id"] = plan.car_id;
    j["content_id"] = plan.content_id;
    auto chunks = nlohmann::ordered_json::array();
    for (int k = 1; k <= plan.n_chunks; ++k) {
        nlohmann::ordered_json entry;
        entry["k"] = k;
        entry["ens"] = plan.ens_for(k);
        entry["p_k"] = plan.prob_for(k);
        chunks.push_back(std::move(entry));
    }
    j["chunks"] = std::move(chunks);
    return j.dump(2);
}

}  // namespace rich
