#include "rich/probmodel.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "rich/errors.hpp"

namespace rich {

void RadioParams::validate() const {
    if (!(bandwidth_bps > 0.0)) throw DataError("radio bandwidth must be > 0");
    if (!(chunk_size_bits > 0.0)) throw DataError("chunk size must be > 0");
    for (double u : avg_users) {
        if (!(u >= 0.0)) throw DataError("avg_users entries must be >= 0");
    }
}

DiscretePdf estimate_chunk_count_dist(const DiscretePdf& dwell_pdf, double bin_width_s,
                                      const RadioParams& radio, int en_index) {
    radio.validate();
    if (bin_width_s <= 0.0) throw UsageError("bin width must be positive");
    if (en_index < 0 || en_index >= static_cast<int>(radio.avg_users.size()))
        throw UsageError("en_index out of range for radio.avg_users");
    const double users = std::max(1.0, radio.avg_users[static_cast<std::size_t>(en_index)]);
    const double chunks_per_second = radio.bandwidth_bps / (radio.chunk_size_bits * users);
    return dwell_pdf.map_values([&](int bin) {
        const double w = static_cast<double>(bin) * bin_width_s;
        return static_cast<long long>(std::floor(w * chunks_per_second));
    });
}

DiscretePdf truncate_to_cache(const DiscretePdf& x_pdf, long long capacity_chunks) {
    return x_pdf.truncated(capacity_chunks);
}

PhiMatrix phi_general(std::span<const DiscretePdf> x_pdfs, int n_chunks) {
    if (x_pdfs.empty()) throw UsageError("phi_general needs at least one EN");
    if (n_chunks < 1) throw UsageError("phi_general needs n_chunks >= 1");

    const int n = static_cast<int>(x_pdfs.size());
    PhiMatrix phi;
    phi.n_ens = n;
    phi.n_chunks = n_chunks;
    phi.values.assign(static_cast<std::size_t>(n) * n_chunks, 0.0);
    phi.per_en_mean.reserve(x_pdfs.size());
    for (const auto& pdf : x_pdfs) phi.per_en_mean.push_back(pdf.mean());

    // running law of the last chunk index delivered by the previous ENs;
    // starts as a point mass at 0 (nothing delivered yet)
    DiscretePdf y_prev = DiscretePdf::point_mass(0);
    for (int i = 0; i < n; ++i) {
        const auto ccdf = x_pdfs[static_cast<std::size_t>(i)].ccdf_table();
        const auto ccdf_at = [&](int v) -> double {
            if (v <= 0) return 1.0;
            if (v >= static_cast<int>(ccdf.size())) return 0.0;
            return ccdf[static_cast<std::size_t>(v)];
        };
        const int y_max = y_prev.max_value();
        for (int k = 1; k <= n_chunks; ++k) {
            // chunk k comes from EN i when the cursor sits at n < k and this
            // EN delivers at least k - n more chunks; n = 0 is a legal cursor
            // (nothing downloaded at earlier ENs)
            double s = 0.0;
            const int n_hi = std::min(k - 1, y_max);
            for (int cursor = 0; cursor <= n_hi; ++cursor) {
                const double py = y_prev.at(cursor);
                if (py == 0.0) continue;
                s += ccdf_at(k - cursor) * py;
            }
            phi.cell(i, k) = s;
        }
        if (i + 1 < n) {
            // cursor values beyond n_chunks - 1 can never contribute to any
            // later column, so cap the convolution there
            y_prev = y_prev.convolve(x_pdfs[static_cast<std::size_t>(i)], n_chunks - 1);
        }
    }
    return phi;
}

PhiMatrix phi_iid(const DiscretePdf& f_x, int n_ens, int n_chunks) {
    if (n_ens < 1) throw UsageError("phi_iid needs n_ens >= 1");
    if (n_chunks < 1) throw UsageError("phi_iid needs n_chunks >= 1");

    PhiMatrix phi;
    phi.n_ens = n_ens;
    phi.n_chunks = n_chunks;
    phi.values.assign(static_cast<std::size_t>(n_ens) * n_chunks, 0.0);
    phi.per_en_mean.assign(static_cast<std::size_t>(n_ens), f_x.mean());

    const auto ccdf = f_x.ccdf_table();
    for (int k = 1; k <= n_chunks; ++k) {
        phi.cell(0, k) =
            (k < static_cast<int>(ccdf.size())) ? ccdf[static_cast<std::size_t>(k)] : 0.0;
    }
    // phi_i = f_x (*) phi_{i-1}, restricted to chunks in [1, n_chunks]
    for (int i = 1; i < n_ens; ++i) {
        for (int k = 1; k <= n_chunks; ++k) {
            double s = 0.0;
            const int t_hi = std::min(k - 1, f_x.max_value());
            for (int t = 0; t <= t_hi; ++t) {
                const double ft = f_x.at(t);
                if (ft == 0.0) continue;
                s += ft * phi.at(i - 1, k - t);
            }
            phi.cell(i, k) = s;
        }
    }
    return phi;
}

PhiMatrix shift_phi(const PhiMatrix& phi, long long delivered) {
    if (delivered < 0) throw UsageError("delivered must be >= 0");
    if (delivered >= phi.n_chunks)
        throw UsageError("delivered must be below the chunk count");
    if (delivered == 0) return phi;

    PhiMatrix out;
    out.n_ens = phi.n_ens;
    out.n_chunks = phi.n_chunks;
    out.per_en_mean = phi.per_en_mean;
    out.values.assign(phi.values.size(), 0.0);
    for (int i = 0; i < phi.n_ens; ++i) {
        for (int k = static_cast<int>(delivered) + 1; k <= phi.n_chunks; ++k) {
            out.cell(i, k) = phi.at(i, k - static_cast<int>(delivered));
        }
    }
    return out;
}

std::string phi_to_json(const PhiMatrix& phi) {
    nlohmann::ordered_json j;
    j["n_ens"] = phi.n_ens;
    j["n_chunks"] = phi.n_chunks;
    j["phi"] = phi.values;
    return j.dump(2);
}

}  // namespace rich
