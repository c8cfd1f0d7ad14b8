#pragma once

#include <span>
#include <string>
#include <vector>

#include "rich/discrete_pdf.hpp"

namespace rich {

// Shared-radio parameters feeding the chunk-count estimate: a car dwelling
// w seconds under EN i downloads about w * bandwidth / (chunk_bits * users_i)
// chunks.
struct RadioParams {
    double bandwidth_bps = 5.2e6;
    double chunk_size_bits = 520000.0;  // 65 kbytes
    std::vector<double> avg_users;      // per EN; floored at 1 on use

    void validate() const;
};

// Per-(EN, chunk) download probabilities for one car path. Chunks are
// 1-based; EN rows are path positions (0-based).
struct PhiMatrix {
    int n_ens = 0;
    int n_chunks = 0;
    std::vector<double> values;        // row-major, n_ens x n_chunks
    std::vector<double> per_en_mean;   // E[X_i] of the input laws

    double at(int en, int chunk) const {
        return values[static_cast<std::size_t>(en) * n_chunks + (chunk - 1)];
    }
    double& cell(int en, int chunk) {
        return values[static_cast<std::size_t>(en) * n_chunks + (chunk - 1)];
    }
};

// Pushforward of a dwell-time law (bin index * bin_width_s seconds) through
// the floor()'d radio formula above, for EN position en_index.
DiscretePdf estimate_chunk_count_dist(const DiscretePdf& dwell_pdf, double bin_width_s,
                                      const RadioParams& radio, int en_index);

// Law of the number of *cached* chunks downloadable when only capacity
// chunks fit: identical below the capacity, tail mass collapsed onto it.
DiscretePdf truncate_to_cache(const DiscretePdf& x_pdf, long long capacity_chunks);

// Download probability per (EN position, chunk) for independent per-EN
// chunk-count laws x_pdfs. Row 0 is the complementary CDF of x_pdfs[0];
// later rows condition on the running sum of the earlier laws.
PhiMatrix phi_general(std::span<const DiscretePdf> x_pdfs, int n_chunks);

// Same-law-at-every-EN special case, computed by repeated convolution with
// f_x. Agrees with phi_general elementwise.
PhiMatrix phi_iid(const DiscretePdf& f_x, int n_ens, int n_chunks);

// Re-index the chunk axis so the plan starts after `delivered` chunks: the
// result at chunk k equals the input at k - delivered. Equivalent to
// recomputing with the delivery cursor advanced to `delivered`.
PhiMatrix shift_phi(const PhiMatrix& phi, long long delivered);

// JSON dump {"n_ens", "n_chunks", "phi": row-major} for plotting.
std::string phi_to_json(const PhiMatrix& phi);

}  // namespace rich
