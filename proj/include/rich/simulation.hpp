#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rich/discrete_pdf.hpp"
#include "rich/metrics.hpp"
#include "rich/rng.hpp"
#include "rich/trace.hpp"

namespace rich {

enum class PolicyKind { rich, netpredict, pop };

std::string policy_name(PolicyKind kind);
PolicyKind policy_from_name(const std::string& name);

struct CatalogSpec {
    int n_contents = 10;
    long long chunks_per_content = 2600;
    double chunk_size_bits = 520000.0;  // 65 kbytes

    long long catalog_chunks() const { return n_contents * chunks_per_content; }
};

struct BackhaulSpec {
    double datastore_rate_bps = 100e6;
    double datastore_delay_s = 0.002;   // Data Store <-> EN propagation
    double prefetcher_delay_s = 10e-6;  // EN <-> Prefetcher propagation
};

struct DwellErrorSpec {
    double mu = 0.0;
    double sigma = 0.0;
};

struct SimulationConfig {
    double radio_bandwidth_bps = 5.2e6;  // shared fluid rate per EN
    BackhaulSpec backhaul;
    CatalogSpec catalog;
    double zipf_alpha = 0.75;

    PolicyKind policy = PolicyKind::rich;
    std::vector<double> taus = {0.8, 0.8};  // per plan position; last value repeats
    bool keep_partial_on_failure = false;
    int plan_horizon = 2;

    long long cache_capacity_chunks = 2600;  // per EN
    bool standard_cache_enabled = false;
    int recovery_margin = 0;  // chunks fetched ahead on a miss; 0 = auto from RTT

    std::optional<DwellErrorSpec> dwell_error;
    double path_skip_fraction = 0.0;

    std::uint64_t seed = 1;
    double bin_width_s = 1.0;  // dwell histogram resolution on the model side

    int eval_positions = 0;  // count metrics only at the first N path positions; 0 = all
    double utility_a = 1.0;
    double utility_b = 1.0;

    void validate() const;
};

// What the Prefetcher knows about one EN: the (capacity-independent) law of
// the chunks a car downloads there, plus bookkeeping for the error models.
struct EnModel {
    DiscretePdf x_pdf;          // chunk count law before cache capping
    double avg_users = 1.0;
    double min_dwell_s = 1.0;   // smallest observed dwell (perturbation floor)
};

struct PrefetchModel {
    std::map<std::string, EnModel> per_en;
};

// Empirical model: per-EN dwell histograms and concurrent-user averages of
// this trace pushed through the radio formula.
PrefetchModel model_from_trace(std::span<const CarPath> trace, const SimulationConfig& config);

// Declarative model: per-EN dwell mixtures over (seconds, prob) points,
// binned at config.bin_width_s; users default to 1 per EN.
PrefetchModel model_from_dwell_spec(
    const std::map<std::string, std::vector<std::pair<double, double>>>& dwell_mixtures,
    const std::map<std::string, double>& users, const SimulationConfig& config);

// max(w_min, w + e) with e ~ N(mu, sigma); sigma = 0 is a deterministic shift.
double perturb_dwell(double w, double mu, double sigma, double w_min, Rng& rng);

// Applies perturb_dwell to every coverage event, stretching each car's
// later schedule by the accumulated dwell change so intervals stay disjoint.
std::vector<CarPath> apply_dwell_error(std::span<const CarPath> trace, const DwellErrorSpec& err,
                                       const std::map<std::string, double>& min_dwell_per_en,
                                       Rng& rng);

// Removes the second coverage event for a uniformly chosen fraction of the
// cars (exact count, sampled without replacement). Plans are not told.
std::vector<CarPath> apply_path_skip(std::span<const CarPath> trace, double fraction, Rng& rng);

// Zipf(alpha) over ranks 1..n; rank r drawn with probability r^-alpha / H.
class ZipfSampler {
public:
    ZipfSampler(int n, double alpha);
    int sample(Rng& rng) const;
    double pmf(int rank) const;

private:
    std::vector<double> cumulative_;
};

int draw_content_request(double zipf_alpha, int n_contents, Rng& rng);

// Test/debug taps filled by run() when requested.
struct RunDebug {
    bool record_deliveries = false;
    std::map<std::string, std::vector<long long>> deliveries;  // car -> chunk ids in order
};

// Simulates the trace to its end under the configured policy and returns
// the metric report. Deterministic for fixed (config, trace, model).
MetricsReport run(const SimulationConfig& config, std::span<const CarPath> trace,
                  const PrefetchModel& model, RunDebug* debug = nullptr,
                  std::ostream* event_log = nullptr);

}  // namespace rich
