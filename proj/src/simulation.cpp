#include "rich/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <set>

#include "rich/edge_cache.hpp"
#include "rich/errors.hpp"
#include "rich/policy.hpp"
#include "rich/probmodel.hpp"

namespace rich {

std::string policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::rich: return "rich";
        case PolicyKind::netpredict: return "netpredict";
        case PolicyKind::pop: return "pop";
    }
    throw InternalError("unknown policy kind");
}

PolicyKind policy_from_name(const std::string& name) {
    if (name == "rich") return PolicyKind::rich;
    if (name == "netpredict") return PolicyKind::netpredict;
    if (name == "pop") return PolicyKind::pop;
    throw UsageError("unknown policy '" + name + "' (expected rich, netpredict, or pop)");
}

void SimulationConfig::validate() const {
    if (!(radio_bandwidth_bps > 0.0)) throw UsageError("radio bandwidth must be > 0");
    if (!(backhaul.datastore_rate_bps > 0.0)) throw UsageError("datastore rate must be > 0");
    if (backhaul.datastore_delay_s < 0.0 || backhaul.prefetcher_delay_s < 0.0)
        throw UsageError("propagation delays must be >= 0");
    if (catalog.n_contents < 1) throw UsageError("catalog needs at least one content");
    if (catalog.chunks_per_content < 1) throw UsageError("contents need at least one chunk");
    if (!(catalog.chunk_size_bits > 0.0)) throw UsageError("chunk size must be > 0");
    if (zipf_alpha < 0.0) throw UsageError("zipf alpha must be >= 0");
    if (plan_horizon < 1) throw UsageError("plan horizon must be >= 1");
    if (taus.empty()) throw UsageError("need at least one threshold");
    for (double t : taus)
        if (!(t >= 0.0 && t <= 1.0)) throw UsageError("thresholds must lie in [0,1]");
    if (cache_capacity_chunks < 0) throw UsageError("cache capacity must be >= 0");
    if (recovery_margin < 0) throw UsageError("recovery margin must be >= 0");
    if (path_skip_fraction < 0.0 || path_skip_fraction > 1.0)
        throw UsageError("path skip fraction must lie in [0,1]");
    if (bin_width_s <= 0.0) throw UsageError("bin width must be > 0");
    if (eval_positions < 0) throw UsageError("eval_positions must be >= 0");
    if (!(utility_a > 0.0) || !(utility_b > 0.0))
        throw UsageError("utility constants must be > 0");
}

PrefetchModel model_from_trace(std::span<const CarPath> trace, const SimulationConfig& config) {
    auto events = flatten_paths(trace);
    auto en_ids = en_ids_in(trace);
    RadioParams radio{config.radio_bandwidth_bps, config.catalog.chunk_size_bits, {}};

    PrefetchModel model;
    for (const auto& en : en_ids) {
        DwellStats stats = empirical_dwell_dist(events, en, config.bin_width_s);
        radio.avg_users = {stats.avg_concurrent_users};
        EnModel m;
        m.avg_users = stats.avg_concurrent_users;
        m.x_pdf = estimate_chunk_count_dist(stats.dwell_pdf, config.bin_width_s, radio, 0);
        double min_dwell = std::numeric_limits<double>::infinity();
        for (const auto& ev : events) {
            if (ev.en_id == en) min_dwell = std::min(min_dwell, ev.t_exit - ev.t_enter);
        }
        m.min_dwell_s = min_dwell;
        model.per_en.emplace(en, std::move(m));
    }
    return model;
}

PrefetchModel model_from_dwell_spec(
    const std::map<std::string, std::vector<std::pair<double, double>>>& dwell_mixtures,
    const std::map<std::string, double>& users, const SimulationConfig& config) {
    PrefetchModel model;
    for (const auto& [en, mixture] : dwell_mixtures) {
        if (mixture.empty()) throw DataError("empty dwell mixture for EN '" + en + "'");
        std::vector<std::pair<int, double>> bins;
        double min_dwell = std::numeric_limits<double>::infinity();
        for (const auto& [seconds, prob] : mixture) {
            if (!(seconds >= 0.0)) throw DataError("dwell seconds must be >= 0");
            bins.emplace_back(static_cast<int>(std::floor(seconds / config.bin_width_s)), prob);
            min_dwell = std::min(min_dwell, seconds);
        }
        EnModel m;
        auto it = users.find(en);
        m.avg_users = (it != users.end()) ? it->second : 1.0;
        DiscretePdf dwell_pdf = DiscretePdf::from_pairs(bins);
        RadioParams radio{config.radio_bandwidth_bps, config.catalog.chunk_size_bits,
                          {m.avg_users}};
        m.x_pdf = estimate_chunk_count_dist(dwell_pdf, config.bin_width_s, radio, 0);
        m.min_dwell_s = min_dwell;
        model.per_en.emplace(en, std::move(m));
    }
    return model;
}

double perturb_dwell(double w, double mu, double sigma, double w_min, Rng& rng) {
    if (!(w_min > 0.0)) throw UsageError("w_min must be positive");
    const double eps = (sigma == 0.0) ? mu : rng.normal(mu, sigma);
    return std::max(w_min, w + eps);
}

std::vector<CarPath> apply_dwell_error(std::span<const CarPath> trace, const DwellErrorSpec& err,
                                       const std::map<std::string, double>& min_dwell_per_en,
                                       Rng& rng) {
    std::vector<CarPath> out;
    out.reserve(trace.size());
    for (const auto& car : trace) {
        CarPath stretched = car;
        double shift = 0.0;  // cumulative dwell change so far for this car
        for (auto& ev : stretched.events) {
            const double w = ev.t_exit - ev.t_enter;
            auto it = min_dwell_per_en.find(ev.en_id);
            const double w_min = (it != min_dwell_per_en.end()) ? it->second : 1.0;
            const double w2 = perturb_dwell(w, err.mu, err.sigma, w_min, rng);
            ev.t_enter += shift;
            ev.t_exit = ev.t_enter + w2;
            shift += w2 - w;
        }
        out.push_back(std::move(stretched));
    }
    return out;
}

std::vector<CarPath> apply_path_skip(std::span<const CarPath> trace, double fraction, Rng& rng) {
    if (fraction < 0.0 || fraction > 1.0) throw UsageError("skip fraction must lie in [0,1]");
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (trace[i].events.size() >= 2) eligible.push_back(i);
    }
    const auto n_skip =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(eligible.size())));
    // partial Fisher-Yates: first n_skip entries are the sample
    for (std::size_t i = 0; i < n_skip && i + 1 < eligible.size(); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(eligible.size() - i));
        std::swap(eligible[i], eligible[j]);
    }
    std::set<std::size_t> skip(eligible.begin(),
                               eligible.begin() + static_cast<std::ptrdiff_t>(
                                                      std::min(n_skip, eligible.size())));

    std::vector<CarPath> out;
    out.reserve(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        CarPath p = trace[i];
        if (skip.count(i)) {
            p.events.erase(p.events.begin() + 1);
            p.en_sequence.erase(p.en_sequence.begin() + 1);
        }
        out.push_back(std::move(p));
    }
    return out;
}

ZipfSampler::ZipfSampler(int n, double alpha) {
    if (n < 1) throw UsageError("zipf needs n >= 1");
    cumulative_.resize(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (int r = 1; r <= n; ++r) {
        acc += std::pow(static_cast<double>(r), -alpha);
        cumulative_[static_cast<std::size_t>(r - 1)] = acc;
    }
    for (double& c : cumulative_) c /= acc;
}

int ZipfSampler::sample(Rng& rng) const {
    const double u = rng.uniform01();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<int>(it - cumulative_.begin()) + 1;
}

double ZipfSampler::pmf(int rank) const {
    const auto i = static_cast<std::size_t>(rank - 1);
    return (i == 0) ? cumulative_[0] : cumulative_[i] - cumulative_[i - 1];
}

int draw_content_request(double zipf_alpha, int n_contents, Rng& rng) {
    return ZipfSampler(n_contents, zipf_alpha).sample(rng);
}

// ---------------------------------------------------------------------------
// Event-driven engine
// ---------------------------------------------------------------------------

namespace {

enum EventKind : int {
    kPlanComputed = 0,
    kPrefetchFetchComplete = 1,
    kRecoveryFetchComplete = 2,
    kChunkDelivered = 3,
    kCarExit = 4,
    kCarEnter = 5,
};

const char* event_name(int kind) {
    switch (kind) {
        case kPlanComputed: return "PlanComputed";
        case kPrefetchFetchComplete: return "PrefetchFetchComplete";
        case kRecoveryFetchComplete: return "RecoveryFetchComplete";
        case kChunkDelivered: return "ChunkDelivered";
        case kCarExit: return "CarExit";
        case kCarEnter: return "CarEnter";
    }
    return "?";
}

struct Ev {
    double t = 0.0;
    int kind = 0;
    int car = -1;
    int en = -1;
    long long a = 0;  // position / first plan position / fetch id
    long long b = 0;  // last plan position
    std::uint64_t gen = 0;
    std::uint64_t seq = 0;
};

struct EvLater {
    bool operator()(const Ev& x, const Ev& y) const {
        if (x.t != y.t) return x.t > y.t;
        if (x.kind != y.kind) return x.kind > y.kind;
        if (x.car != y.car) return x.car > y.car;
        if (x.en != y.en) return x.en > y.en;
        return x.seq > y.seq;
    }
};

struct Visit {
    double enter = 0.0;
    double exit = 0.0;
    int position = 0;  // 1-based index in the planned path
    int en = -1;
};

struct CarState {
    std::string id;
    std::vector<int> planned_ens;  // EN index per planned position
    std::vector<Visit> visits;     // actual coverage after error models
    bool entered_once = false;
    int content = 0;  // 1-based, 0 until drawn
    long long next_chunk = 1;
    bool done = false;
    int position_now = 0;  // 0 = not under coverage
    int en_now = -1;
    int visits_left = 0;

    bool transferring = false;
    double tx_remaining_bits = 0.0;
    bool tx_hit = false;
    long long tx_chunk = 0;
    std::uint64_t tx_gen = 0;

    bool waiting = false;
    long long waiting_chunk = 0;
    bool waiting_hit_class = false;
    bool consumption_deferred = false;

    int plan_last = 0;          // highest position the current plan covers
    int pending_plan_last = 0;  // same, for a plan request still in flight
    std::set<long long> relay;  // recovery chunks landed but not yet consumed
};

struct FetchRecord {
    ChunkKey key;
    bool recovery = false;
    double prob = 0.0;
    std::vector<int> cars;
};

struct EnState {
    std::string id;
    EdgeCache cache;
    double link_free_at = 0.0;
    std::map<ChunkKey, int> inflight;  // key -> index into fetches
    std::vector<FetchRecord> fetches;
    std::map<ChunkKey, std::vector<int>> waiters;

    std::set<int> active_cars;  // cars with a radio transfer in flight
    double radio_last = 0.0;

    int present_scoped = 0;
    double covered_since = 0.0;
    double covered_accum = 0.0;

    double occ_last = 0.0;
    double occ_integral = 0.0;  // chunk-seconds

    EnMetrics metrics;

    EnState(std::string en_id, long long capacity)
        : id(en_id), cache(std::move(en_id), capacity) {}
};

// Plan templates are shared per EN tuple: the chunk axis is relative to the
// car's delivery cursor at plan time, so one template serves every car on
// the same (sub)path regardless of how much it has already downloaded.
// Offsetting by the cursor is exactly the shift_phi re-indexing.
struct PlanTemplate {
    // per EN row: (relative chunk, probability) pairs, ascending chunk
    std::vector<std::vector<std::pair<int, double>>> rich_rows;
    std::vector<double> mean_chunks;  // E[X-hat] per EN row
};

class Engine {
public:
    Engine(const SimulationConfig& cfg, std::span<const CarPath> trace, const PrefetchModel& model,
           RunDebug* debug, std::ostream* log)
        : cfg_(cfg), model_(model), debug_(debug), log_(log), zipf_(cfg.catalog.n_contents, cfg.zipf_alpha),
          workload_rng_(Rng::derive(cfg.seed, "workload")) {
        cfg_.validate();
        chunk_bits_ = cfg_.catalog.chunk_size_bits;
        n_chunks_ = cfg_.catalog.chunks_per_content;
        recovery_margin_ = cfg_.recovery_margin;
        if (recovery_margin_ == 0) {
            const double rtt = 2.0 * cfg_.backhaul.datastore_delay_s;
            recovery_margin_ =
                static_cast<int>(std::ceil(rtt * cfg_.radio_bandwidth_bps / chunk_bits_)) + 1;
        }
        build_world(trace);
    }

    MetricsReport run_to_end();

private:
    SimulationConfig cfg_;
    const PrefetchModel& model_;
    RunDebug* debug_;
    std::ostream* log_;
    ZipfSampler zipf_;
    Rng workload_rng_;

    double chunk_bits_ = 0.0;
    long long n_chunks_ = 0;
    int recovery_margin_ = 0;

    std::vector<EnState> ens_;
    std::vector<CarState> cars_;
    std::map<std::string, int> en_index_;

    std::priority_queue<Ev, std::vector<Ev>, EvLater> queue_;
    std::uint64_t seq_ = 0;
    double now_ = 0.0;
    double span_start_ = 0.0;
    double last_event_t_ = 0.0;

    int global_present_ = 0;
    double global_since_ = 0.0;
    double global_accum_ = 0.0;

    long long hits_ = 0, misses_ = 0;
    long long hit_bits_ = 0, miss_bits_ = 0;
    long long prefetch_bits_ = 0, recovery_bits_ = 0;
    long long plans_computed_ = 0, inserts_rejected_ = 0;

    std::map<std::vector<int>, PlanTemplate> templates_;
    std::map<int, DiscretePdf> x_hat_;  // per EN index, capacity-capped law

    void push(Ev ev) {
        ev.seq = ++seq_;
        queue_.push(ev);
    }

    void log_event(const Ev& ev) {
        if (!log_) return;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "t=%.6f %s car=%s en=%s a=%lld b=%lld\n", ev.t,
                      event_name(ev.kind), ev.car >= 0 ? cars_[ev.car].id.c_str() : "-",
                      ev.en >= 0 ? ens_[ev.en].id.c_str() : "-", ev.a, ev.b);
        (*log_) << buf;
    }

    bool scoped(int position) const {
        return cfg_.eval_positions == 0 || position <= cfg_.eval_positions;
    }

    void build_world(std::span<const CarPath> trace);
    void pop_fill();

    const DiscretePdf& x_hat_for(int en);
    const PlanTemplate& template_for(const std::vector<int>& ens);

    // presence / integrals
    void presence_enter(int en, int position, double t);
    void presence_exit(int en, int position, double t);
    void occupancy_touch(int en, double t);

    // radio
    void radio_elapse(int en, double t);
    void radio_reschedule(int en, double t);
    void radio_join(int car, int en, double t);
    void radio_leave(int car, int en, double t);

    // backhaul
    double backhaul_land_time(int en, double t);
    void queue_fetch(int en, ChunkKey key, bool recovery, double prob, int car, double t);

    // protocol steps
    void instruct_prefetch(int en, ChunkKey key, double prob, int car, double t);
    void apply_plan(int car_idx, int first_pos, int last_pos, double t);
    void request_next(int car_idx, double t);
    void issue_recovery_window(int car_idx, int en, long long from_chunk, double t);
    void start_transfer(int car_idx, int en, long long chunk, bool hit, double t);
    void end_session(int car_idx, double t);
    void detach_car_from_en(int car_idx, int en);

    // event handlers
    void on_enter(const Ev& ev);
    void on_exit(const Ev& ev);
    void on_plan(const Ev& ev);
    void on_prefetch_land(const Ev& ev);
    void on_recovery_land(const Ev& ev);
    void on_delivered(const Ev& ev);

    MetricsReport finalize();
};

void Engine::build_world(std::span<const CarPath> trace) {
    // error models first; the planned paths stay as given
    std::vector<CarPath> actual(trace.begin(), trace.end());
    if (cfg_.dwell_error) {
        std::map<std::string, double> w_min;
        for (const auto& [en, m] : model_.per_en) w_min[en] = m.min_dwell_s;
        Rng rng(Rng::derive(cfg_.seed, "dwell-error"));
        actual = apply_dwell_error(actual, *cfg_.dwell_error, w_min, rng);
    }
    if (cfg_.path_skip_fraction > 0.0) {
        Rng rng(Rng::derive(cfg_.seed, "path-skip"));
        actual = apply_path_skip(actual, cfg_.path_skip_fraction, rng);
    }

    for (const auto& en : en_ids_in(trace)) {
        if (!model_.per_en.count(en))
            throw DataError("trace references EN '" + en + "' missing from the model");
        en_index_.emplace(en, static_cast<int>(ens_.size()));
        ens_.emplace_back(en, cfg_.cache_capacity_chunks);
    }

    bool any_visit = false;
    double first_enter = 0.0;
    cars_.reserve(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        CarState car;
        car.id = trace[i].car_id;
        for (const auto& en : trace[i].en_sequence) car.planned_ens.push_back(en_index_.at(en));
        // match actual coverage back to planned positions (skips leave gaps)
        std::size_t p = 0;
        for (const auto& ev : actual[i].events) {
            const int en = en_index_.at(ev.en_id);
            while (p < car.planned_ens.size() && car.planned_ens[p] != en) ++p;
            if (p >= car.planned_ens.size())
                throw InternalError("actual path is not a subsequence of the planned path");
            car.visits.push_back({ev.t_enter, ev.t_exit, static_cast<int>(p) + 1, en});
            ++p;
            if (!any_visit || ev.t_enter < first_enter) {
                first_enter = ev.t_enter;
                any_visit = true;
            }
        }
        car.visits_left = static_cast<int>(car.visits.size());
        cars_.push_back(std::move(car));
    }
    span_start_ = any_visit ? first_enter : 0.0;
    last_event_t_ = span_start_;
    for (auto& en : ens_) {
        en.occ_last = span_start_;
        en.radio_last = span_start_;
    }

    for (std::size_t c = 0; c < cars_.size(); ++c) {
        for (const auto& v : cars_[c].visits) {
            push({v.enter, kCarEnter, static_cast<int>(c), v.en, v.position, 0, 0, 0});
            push({v.exit, kCarExit, static_cast<int>(c), v.en, v.position, 0, 0, 0});
        }
    }

    if (cfg_.policy == PolicyKind::pop) pop_fill();
}

void Engine::pop_fill() {
    std::vector<int> ranks;
    for (int cnt = 1; cnt <= cfg_.catalog.n_contents; ++cnt) ranks.push_back(cnt);
    const auto slices = pop_plan(ranks, n_chunks_, cfg_.cache_capacity_chunks);
    for (auto& en : ens_) {
        for (const auto& slice : slices) {
            for (long long k = 1; k <= slice.n_chunks; ++k) {
                en.cache.insert({slice.content, k}, CachePartition::prefetch, 0.0, {});
                prefetch_bits_ += static_cast<long long>(chunk_bits_);
            }
        }
    }
}

const DiscretePdf& Engine::x_hat_for(int en) {
    auto it = x_hat_.find(en);
    if (it == x_hat_.end()) {
        const auto& m = model_.per_en.at(ens_[static_cast<std::size_t>(en)].id);
        it = x_hat_.emplace(en, truncate_to_cache(m.x_pdf, cfg_.cache_capacity_chunks)).first;
    }
    return it->second;
}

const PlanTemplate& Engine::template_for(const std::vector<int>& ens) {
    auto it = templates_.find(ens);
    if (it != templates_.end()) return it->second;

    PlanTemplate tmpl;
    std::vector<DiscretePdf> pdfs;
    for (int en : ens) {
        const auto& pdf = x_hat_for(en);
        pdfs.push_back(pdf);
        tmpl.mean_chunks.push_back(pdf.mean());
    }
    if (cfg_.policy == PolicyKind::rich) {
        const PhiMatrix phi = phi_general(pdfs, static_cast<int>(n_chunks_));
        std::vector<double> taus;
        for (std::size_t pos = 0; pos < ens.size(); ++pos) {
            taus.push_back(cfg_.taus[std::min(pos, cfg_.taus.size() - 1)]);
        }
        const PrefetchPlan plan =
            rich_plan(phi, make_threshold_profile(phi, taus), cfg_.keep_partial_on_failure);
        tmpl.rich_rows.resize(ens.size());
        for (int k = 1; k <= plan.n_chunks; ++k) {
            for (int row : plan.ens_for(k)) {
                tmpl.rich_rows[static_cast<std::size_t>(row)].emplace_back(k, phi.at(row, k));
            }
        }
    }
    return templates_.emplace(ens, std::move(tmpl)).first->second;
}

void Engine::presence_enter(int en, int position, double t) {
    if (!scoped(position)) return;
    auto& e = ens_[static_cast<std::size_t>(en)];
    if (e.present_scoped++ == 0) e.covered_since = t;
    if (global_present_++ == 0) global_since_ = t;
}

void Engine::presence_exit(int en, int position, double t) {
    if (!scoped(position)) return;
    auto& e = ens_[static_cast<std::size_t>(en)];
    if (--e.present_scoped == 0) e.covered_accum += t - e.covered_since;
    if (--global_present_ == 0) global_accum_ += t - global_since_;
}

void Engine::occupancy_touch(int en, double t) {
    auto& e = ens_[static_cast<std::size_t>(en)];
    e.occ_integral += static_cast<double>(e.cache.size()) * (t - e.occ_last);
    e.occ_last = t;
}

void Engine::radio_elapse(int en, double t) {
    auto& e = ens_[static_cast<std::size_t>(en)];
    const double dt = t - e.radio_last;
    if (dt > 0.0 && !e.active_cars.empty()) {
        const double rate = cfg_.radio_bandwidth_bps / static_cast<double>(e.active_cars.size());
        for (int c : e.active_cars) {
            auto& car = cars_[static_cast<std::size_t>(c)];
            car.tx_remaining_bits = std::max(0.0, car.tx_remaining_bits - rate * dt);
        }
    }
    e.radio_last = t;
}

void Engine::radio_reschedule(int en, double t) {
    auto& e = ens_[static_cast<std::size_t>(en)];
    if (e.active_cars.empty()) return;
    const double rate = cfg_.radio_bandwidth_bps / static_cast<double>(e.active_cars.size());
    for (int c : e.active_cars) {
        auto& car = cars_[static_cast<std::size_t>(c)];
        ++car.tx_gen;
        push({t + car.tx_remaining_bits / rate, kChunkDelivered, c, en, car.tx_chunk, 0,
              car.tx_gen, 0});
    }
}

void Engine::radio_join(int car_idx, int en, double t) {
    radio_elapse(en, t);
    ens_[static_cast<std::size_t>(en)].active_cars.insert(car_idx);
    radio_reschedule(en, t);
}

void Engine::radio_leave(int car_idx, int en, double t) {
    radio_elapse(en, t);
    ens_[static_cast<std::size_t>(en)].active_cars.erase(car_idx);
    ++cars_[static_cast<std::size_t>(car_idx)].tx_gen;  // invalidate any scheduled completion
    radio_reschedule(en, t);
}

double Engine::backhaul_land_time(int en, double t) {
    auto& e = ens_[static_cast<std::size_t>(en)];
    const double start = std::max(t, e.link_free_at);
    e.link_free_at = start + chunk_bits_ / cfg_.backhaul.datastore_rate_bps;
    return e.link_free_at + cfg_.backhaul.datastore_delay_s;
}

void Engine::queue_fetch(int en, ChunkKey key, bool recovery, double prob, int car, double t) {
    auto& e = ens_[static_cast<std::size_t>(en)];
    FetchRecord rec;
    rec.key = key;
    rec.recovery = recovery;
    rec.prob = prob;
    if (car >= 0) rec.cars.push_back(car);
    const int fid = static_cast<int>(e.fetches.size());
    e.fetches.push_back(std::move(rec));
    e.inflight.emplace(key, fid);
    push({backhaul_land_time(en, t),
          recovery ? kRecoveryFetchComplete : kPrefetchFetchComplete, -1, en, fid, 0, 0, 0});
}

void Engine::instruct_prefetch(int en, ChunkKey key, double prob, int car, double t) {
    auto& e = ens_[static_cast<std::size_t>(en)];
    if (e.cache.contains(key)) {
        occupancy_touch(en, t);
        const int pending[] = {car};
        e.cache.insert(key, CachePartition::prefetch, prob, pending);  // merges
        return;
    }
    if (auto it = e.inflight.find(key); it != e.inflight.end()) {
        auto& rec = e.fetches[static_cast<std::size_t>(it->second)];
        rec.prob = std::max(rec.prob, prob);
        if (std::find(rec.cars.begin(), rec.cars.end(), car) == rec.cars.end())
            rec.cars.push_back(car);
        return;
    }
    queue_fetch(en, key, /*recovery=*/false, prob, car, t);
}

void Engine::apply_plan(int car_idx, int first_pos, int last_pos, double t) {
    auto& car = cars_[static_cast<std::size_t>(car_idx)];
    ++plans_computed_;
    car.plan_last = last_pos;
    if (car.pending_plan_last <= last_pos) car.pending_plan_last = 0;
    const long long delivered = car.next_chunk - 1;

    std::vector<int> ens(car.planned_ens.begin() + (first_pos - 1),
                         car.planned_ens.begin() + last_pos);
    const PlanTemplate& tmpl = template_for(ens);

    if (cfg_.policy == PolicyKind::rich) {
        for (std::size_t row = 0; row < ens.size(); ++row) {
            for (const auto& [k_rel, prob] : tmpl.rich_rows[row]) {
                const long long k = k_rel + delivered;
                if (k > n_chunks_) break;
                instruct_prefetch(ens[row], {car.content, k}, prob, car_idx, t);
            }
        }
    } else if (cfg_.policy == PolicyKind::netpredict) {
        const auto ranges = netpredict_plan(tmpl.mean_chunks, delivered + 1);
        for (std::size_t row = 0; row < ranges.size(); ++row) {
            const long long hi = std::min(ranges[row].last, n_chunks_);
            for (long long k = ranges[row].first; k <= hi; ++k) {
                instruct_prefetch(ens[row], {car.content, k}, 1.0, car_idx, t);
            }
        }
    }

    if (car.consumption_deferred && car.position_now >= first_pos &&
        car.position_now <= last_pos) {
        car.consumption_deferred = false;
        request_next(car_idx, t);
    }
}

void Engine::issue_recovery_window(int car_idx, int en, long long from_chunk, double t) {
    auto& car = cars_[static_cast<std::size_t>(car_idx)];
    auto& e = ens_[static_cast<std::size_t>(en)];
    const long long hi = std::min(from_chunk + recovery_margin_ - 1, n_chunks_);
    for (long long k = from_chunk; k <= hi; ++k) {
        const ChunkKey key{car.content, k};
        if (e.cache.contains(key) || e.inflight.count(key) || car.relay.count(k)) continue;
        queue_fetch(en, key, /*recovery=*/true, 0.0, car_idx, t);
    }
}

void Engine::start_transfer(int car_idx, int en, long long chunk, bool hit, double t) {
    auto& car = cars_[static_cast<std::size_t>(car_idx)];
    car.transferring = true;
    car.tx_remaining_bits = chunk_bits_;
    car.tx_hit = hit;
    car.tx_chunk = chunk;
    radio_join(car_idx, en, t);
}

void Engine::request_next(int car_idx, double t) {
    auto& car = cars_[static_cast<std::size_t>(car_idx)];
    if (car.done || car.position_now == 0 || car.transferring || car.waiting ||
        car.consumption_deferred)
        return;
    if (car.next_chunk > n_chunks_) {
        end_session(car_idx, t);
        return;
    }
    const int en = car.en_now;
    auto& e = ens_[static_cast<std::size_t>(en)];
    const ChunkKey key{car.content, car.next_chunk};

    if (e.cache.lookup(key, car_idx)) {
        start_transfer(car_idx, en, car.next_chunk, /*hit=*/true, t);
        return;
    }
    if (car.relay.erase(car.next_chunk) > 0) {
        start_transfer(car_idx, en, car.next_chunk, /*hit=*/false, t);
        issue_recovery_window(car_idx, en, car.next_chunk + 1, t);
        return;
    }
    if (auto it = e.inflight.find(key); it != e.inflight.end()) {
        auto& rec = e.fetches[static_cast<std::size_t>(it->second)];
        if (std::find(rec.cars.begin(), rec.cars.end(), car_idx) == rec.cars.end())
            rec.cars.push_back(car_idx);
        car.waiting = true;
        car.waiting_chunk = car.next_chunk;
        // a chunk already in the prefetch pipe is served from the Prefetch
        // Cache when it lands; only recovery fetches count as misses
        car.waiting_hit_class = !rec.recovery;
        e.waiters[key].push_back(car_idx);
        if (rec.recovery) issue_recovery_window(car_idx, en, car.next_chunk + 1, t);
        return;
    }
    issue_recovery_window(car_idx, en, car.next_chunk, t);
    car.waiting = true;
    car.waiting_chunk = car.next_chunk;
    car.waiting_hit_class = false;
    e.waiters[key].push_back(car_idx);
}

void Engine::detach_car_from_en(int car_idx, int en) {
    auto& e = ens_[static_cast<std::size_t>(en)];
    e.cache.release_car(car_idx);
    for (auto& [key, fid] : e.inflight) {
        auto& rec = e.fetches[static_cast<std::size_t>(fid)];
        rec.cars.erase(std::remove(rec.cars.begin(), rec.cars.end(), car_idx), rec.cars.end());
    }
    for (auto& [key, list] : e.waiters) {
        list.erase(std::remove(list.begin(), list.end(), car_idx), list.end());
    }
}

void Engine::end_session(int car_idx, double t) {
    auto& car = cars_[static_cast<std::size_t>(car_idx)];
    if (car.done) return;
    car.done = true;
    car.relay.clear();
    car.waiting = false;
    car.consumption_deferred = false;
    std::set<int> planned(car.planned_ens.begin(), car.planned_ens.end());
    for (int en : planned) detach_car_from_en(car_idx, en);
    (void)t;
}

void Engine::on_enter(const Ev& ev) {
    auto& car = cars_[static_cast<std::size_t>(ev.car)];
    const int position = static_cast<int>(ev.a);
    car.position_now = position;
    car.en_now = ev.en;
    presence_enter(ev.en, position, ev.t);

    if (!car.entered_once) {
        car.entered_once = true;
        car.content = zipf_.sample(workload_rng_);
        if (cfg_.policy == PolicyKind::pop) {
            request_next(ev.car, ev.t);
        } else {
            const int last =
                std::min(cfg_.plan_horizon, static_cast<int>(car.planned_ens.size()));
            car.consumption_deferred = true;
            car.pending_plan_last = last;
            push({ev.t + cfg_.backhaul.prefetcher_delay_s, kPlanComputed, ev.car, -1, 1, last, 0,
                  0});
        }
        return;
    }
    if (car.done) return;

    if (cfg_.policy != PolicyKind::pop && position > car.plan_last) {
        if (position <= car.pending_plan_last) {
            car.consumption_deferred = true;  // plan already on its way
        } else {
            const int last = std::min(position + cfg_.plan_horizon - 1,
                                      static_cast<int>(car.planned_ens.size()));
            car.consumption_deferred = true;
            car.pending_plan_last = last;
            push({ev.t + cfg_.backhaul.prefetcher_delay_s, kPlanComputed, ev.car, -1, position,
                  last, 0, 0});
        }
        return;
    }
    request_next(ev.car, ev.t);
}

void Engine::on_exit(const Ev& ev) {
    auto& car = cars_[static_cast<std::size_t>(ev.car)];
    const int position = static_cast<int>(ev.a);
    const int en = ev.en;
    auto& e = ens_[static_cast<std::size_t>(en)];

    if (car.transferring) {  // partial chunk is lost; it will be re-requested later
        radio_leave(ev.car, en, ev.t);
        car.transferring = false;
    }
    if (car.waiting) {
        auto it = e.waiters.find({car.content, car.waiting_chunk});
        if (it != e.waiters.end())
            it->second.erase(std::remove(it->second.begin(), it->second.end(), ev.car),
                             it->second.end());
        car.waiting = false;
    }
    car.consumption_deferred = false;
    car.relay.clear();
    detach_car_from_en(ev.car, en);

    presence_exit(en, position, ev.t);
    car.position_now = 0;
    car.en_now = -1;
    --car.visits_left;

    if (car.visits_left == 0) {
        end_session(ev.car, ev.t);
        return;
    }
    if (car.done || cfg_.policy == PolicyKind::pop) return;

    // anticipatory refresh: the Prefetcher assumes the car proceeds to the
    // next planned position and re-plans while the car is between coverages
    const int planned_next = position + 1;
    if (planned_next <= static_cast<int>(car.planned_ens.size()) &&
        planned_next > car.plan_last && planned_next > car.pending_plan_last) {
        const int last =
            std::min(planned_next + cfg_.plan_horizon - 1, static_cast<int>(car.planned_ens.size()));
        car.pending_plan_last = last;
        push({ev.t + cfg_.backhaul.prefetcher_delay_s, kPlanComputed, ev.car, -1, planned_next,
              last, 0, 0});
    }
}

void Engine::on_plan(const Ev& ev) {
    auto& car = cars_[static_cast<std::size_t>(ev.car)];
    if (car.done) return;
    apply_plan(ev.car, static_cast<int>(ev.a), static_cast<int>(ev.b), ev.t);
}

void Engine::on_prefetch_land(const Ev& ev) {
    auto& e = ens_[static_cast<std::size_t>(ev.en)];
    auto& rec = e.fetches[static_cast<std::size_t>(ev.a)];
    e.inflight.erase(rec.key);
    prefetch_bits_ += static_cast<long long>(chunk_bits_);

    occupancy_touch(ev.en, ev.t);
    const auto result =
        e.cache.insert(rec.key, CachePartition::prefetch, rec.prob, rec.cars);
    if (result == EdgeCache::InsertResult::rejected) ++inserts_rejected_;

    auto wit = e.waiters.find(rec.key);
    if (wit == e.waiters.end()) return;
    std::vector<int> waiting = std::move(wit->second);
    e.waiters.erase(wit);
    for (int c : waiting) {
        auto& car = cars_[static_cast<std::size_t>(c)];
        if (car.done || !car.waiting || car.waiting_chunk != rec.key.chunk || car.en_now != ev.en)
            continue;
        e.cache.lookup(rec.key, c);  // delivery bookkeeping when the insert stuck
        car.waiting = false;
        start_transfer(c, ev.en, rec.key.chunk, car.waiting_hit_class, ev.t);
    }
}

void Engine::on_recovery_land(const Ev& ev) {
    auto& e = ens_[static_cast<std::size_t>(ev.en)];
    auto& rec = e.fetches[static_cast<std::size_t>(ev.a)];
    e.inflight.erase(rec.key);
    recovery_bits_ += static_cast<long long>(chunk_bits_);

    if (cfg_.standard_cache_enabled) {
        occupancy_touch(ev.en, ev.t);
        e.cache.insert(rec.key, CachePartition::standard, 0.0, {}, /*delivered_hint=*/true);
    }

    std::set<int> served;
    if (auto wit = e.waiters.find(rec.key); wit != e.waiters.end()) {
        std::vector<int> waiting = std::move(wit->second);
        e.waiters.erase(wit);
        for (int c : waiting) {
            auto& car = cars_[static_cast<std::size_t>(c)];
            if (car.done || !car.waiting || car.waiting_chunk != rec.key.chunk ||
                car.en_now != ev.en)
                continue;
            car.waiting = false;
            served.insert(c);
            start_transfer(c, ev.en, rec.key.chunk, car.waiting_hit_class, ev.t);
        }
    }
    // relay buffer: hold for the requesting cars that have not reached this
    // chunk yet and are still under this EN
    for (int c : rec.cars) {
        if (served.count(c)) continue;
        auto& car = cars_[static_cast<std::size_t>(c)];
        if (!car.done && car.en_now == ev.en && car.content == rec.key.content &&
            car.next_chunk <= rec.key.chunk) {
            car.relay.insert(rec.key.chunk);
        }
    }
}

void Engine::on_delivered(const Ev& ev) {
    auto& car = cars_[static_cast<std::size_t>(ev.car)];
    if (!car.transferring || ev.gen != car.tx_gen) return;  // superseded schedule
    const int en = car.en_now;
    auto& e = ens_[static_cast<std::size_t>(en)];

    radio_elapse(en, ev.t);
    e.active_cars.erase(ev.car);
    ++car.tx_gen;
    car.transferring = false;

    if (scoped(car.position_now)) {
        const auto bits = static_cast<long long>(chunk_bits_);
        if (car.tx_hit) {
            ++hits_;
            hit_bits_ += bits;
            ++e.metrics.hits;
            e.metrics.hit_bits += bits;
        } else {
            ++misses_;
            miss_bits_ += bits;
            ++e.metrics.misses;
            e.metrics.miss_bits += bits;
        }
    }
    if (debug_ && debug_->record_deliveries) debug_->deliveries[car.id].push_back(car.tx_chunk);

    car.next_chunk = car.tx_chunk + 1;
    radio_reschedule(en, ev.t);
    request_next(ev.car, ev.t);
}

MetricsReport Engine::run_to_end() {
    while (!queue_.empty()) {
        const Ev ev = queue_.top();
        queue_.pop();
        // stale radio completions are the only events that may be skipped
        if (ev.kind == kChunkDelivered) {
            const auto& car = cars_[static_cast<std::size_t>(ev.car)];
            if (!car.transferring || ev.gen != car.tx_gen) continue;
        }
        now_ = ev.t;
        last_event_t_ = std::max(last_event_t_, ev.t);
        log_event(ev);
        switch (ev.kind) {
            case kPlanComputed: on_plan(ev); break;
            case kPrefetchFetchComplete: on_prefetch_land(ev); break;
            case kRecoveryFetchComplete: on_recovery_land(ev); break;
            case kChunkDelivered: on_delivered(ev); break;
            case kCarExit: on_exit(ev); break;
            case kCarEnter: on_enter(ev); break;
            default: throw InternalError("unknown event kind");
        }
    }
    return finalize();
}

MetricsReport Engine::finalize() {
    MetricsReport r;
    r.policy = policy_name(cfg_.policy);
    r.cache_chunks = cfg_.cache_capacity_chunks;
    r.c_hat = static_cast<double>(cfg_.cache_capacity_chunks) /
              static_cast<double>(cfg_.catalog.catalog_chunks());
    r.seed = cfg_.seed;
    r.hits = hits_;
    r.misses = misses_;
    r.hit_probability =
        (hits_ + misses_ > 0)
            ? static_cast<double>(hits_) / static_cast<double>(hits_ + misses_)
            : 0.0;
    r.covered_time_s = global_accum_;
    r.hit_bits = hit_bits_;
    r.miss_bits = miss_bits_;
    r.delivered_bits = hit_bits_ + miss_bits_;
    r.prefetch_bits = prefetch_bits_;
    r.recovery_bits = recovery_bits_;
    r.cache_throughput_bps =
        (global_accum_ > 0.0) ? static_cast<double>(hit_bits_) / global_accum_ : 0.0;
    r.backhaul_traffic_bps =
        (global_accum_ > 0.0) ? static_cast<double>(recovery_bits_) / global_accum_ : 0.0;
    if (r.delivered_bits > 0) {
        r.overhead = static_cast<double>(prefetch_bits_ + recovery_bits_ - r.delivered_bits) /
                     static_cast<double>(r.delivered_bits);
    }
    const double span = last_event_t_ - span_start_;
    double occ_chunk_seconds = 0.0;
    for (std::size_t i = 0; i < ens_.size(); ++i) {
        occupancy_touch(static_cast<int>(i), last_event_t_);
        occ_chunk_seconds += ens_[i].occ_integral;
    }
    r.network_cache_occupancy =
        (span > 0.0)
            ? (occ_chunk_seconds / span) / static_cast<double>(cfg_.catalog.catalog_chunks())
            : 0.0;
    r.joint_utility = joint_utility(r.hit_probability, r.c_hat, cfg_.utility_a, cfg_.utility_b);
    r.plans_computed = plans_computed_;
    r.inserts_rejected = inserts_rejected_;
    for (auto& e : ens_) {
        EnMetrics m = e.metrics;
        m.en_id = e.id;
        m.covered_time_s = e.covered_accum;
        m.cache_throughput_bps =
            (e.covered_accum > 0.0) ? static_cast<double>(m.hit_bits) / e.covered_accum : 0.0;
        r.per_en.push_back(std::move(m));
    }
    return r;
}

}  // namespace

MetricsReport run(const SimulationConfig& config, std::span<const CarPath> trace,
                  const PrefetchModel& model, RunDebug* debug, std::ostream* event_log) {
    Engine engine(config, trace, model, debug, event_log);
    return engine.run_to_end();
}

}  // namespace rich
