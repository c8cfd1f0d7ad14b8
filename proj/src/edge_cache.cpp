#include "rich/edge_cache.hpp"

#include <algorithm>

#include "rich/errors.hpp"

namespace rich {

EdgeCache::EdgeCache(std::string en_id, long long capacity)
    : en_id_(std::move(en_id)), capacity_(capacity) {
    if (capacity < 0) throw UsageError("cache capacity must be >= 0");
}

void EdgeCache::refresh_delivered(ChunkKey key, Entry& e) {
    const bool now = e.pending.empty() && e.served_or_abandoned;
    if (now == e.delivered) return;
    (e.delivered ? delivered_order_ : undelivered_order_).erase({e.prob, key});
    e.delivered = now;
    (e.delivered ? delivered_order_ : undelivered_order_).insert({e.prob, key});
}

void EdgeCache::erase_entry(ChunkKey key, const Entry& e) {
    (e.delivered ? delivered_order_ : undelivered_order_).erase({e.prob, key});
    entries_.erase(key);
}

EdgeCache::InsertResult EdgeCache::insert(ChunkKey key, CachePartition partition,
                                          double download_prob, std::span<const int> pending_cars,
                                          bool delivered_hint) {
    if (auto it = entries_.find(key); it != entries_.end()) {
        Entry& e = it->second;
        (e.delivered ? delivered_order_ : undelivered_order_).erase({e.prob, key});
        e.prob = std::max(e.prob, download_prob);
        for (int car : pending_cars) {
            auto pos = std::lower_bound(e.pending.begin(), e.pending.end(), car);
            if (pos == e.pending.end() || *pos != car) e.pending.insert(pos, car);
        }
        e.delivered = e.pending.empty() && e.served_or_abandoned;
        (e.delivered ? delivered_order_ : undelivered_order_).insert({e.prob, key});
        return InsertResult::merged;
    }

    if (capacity_ == 0) return InsertResult::rejected;
    if (size() >= capacity_) {
        // delivered entries go first, cheapest first
        if (!delivered_order_.empty()) {
            const ChunkKey victim = std::get<1>(*delivered_order_.begin());
            erase_entry(victim, entries_.at(victim));
        } else {
            // an undelivered resident yields only to a strictly better chunk
            const auto& [min_prob, victim] = *undelivered_order_.begin();
            if (!(download_prob > min_prob)) return InsertResult::rejected;
            erase_entry(victim, entries_.at(victim));
        }
    }

    Entry e;
    e.partition = partition;
    e.prob = download_prob;
    e.pending.assign(pending_cars.begin(), pending_cars.end());
    std::sort(e.pending.begin(), e.pending.end());
    e.pending.erase(std::unique(e.pending.begin(), e.pending.end()), e.pending.end());
    // nobody left to wait for means the entry is immediately reclaimable
    e.served_or_abandoned = delivered_hint || e.pending.empty();
    e.delivered = e.pending.empty() && e.served_or_abandoned;
    (e.delivered ? delivered_order_ : undelivered_order_).insert({e.prob, key});
    entries_.emplace(key, std::move(e));
    return InsertResult::inserted;
}

std::optional<EdgeCache::Hit> EdgeCache::lookup(ChunkKey key, int car_id) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    Entry& e = it->second;
    auto pos = std::lower_bound(e.pending.begin(), e.pending.end(), car_id);
    if (pos != e.pending.end() && *pos == car_id) e.pending.erase(pos);
    e.served_or_abandoned = true;
    refresh_delivered(key, e);
    return Hit{e.partition};
}

std::vector<ChunkKey> EdgeCache::evict_for(long long space_needed) {
    if (space_needed < 1) throw UsageError("space_needed must be >= 1");
    std::vector<ChunkKey> evicted;
    long long freed = capacity_ - size();
    while (freed < space_needed && !entries_.empty()) {
        const auto& order = delivered_order_.empty() ? undelivered_order_ : delivered_order_;
        const ChunkKey victim = std::get<1>(*order.begin());
        erase_entry(victim, entries_.at(victim));
        evicted.push_back(victim);
        ++freed;
    }
    return evicted;
}

void EdgeCache::release_car(int car_id) {
    for (auto& [key, e] : entries_) {
        auto pos = std::lower_bound(e.pending.begin(), e.pending.end(), car_id);
        if (pos == e.pending.end() || *pos != car_id) continue;
        e.pending.erase(pos);
        if (e.pending.empty()) e.served_or_abandoned = true;
        refresh_delivered(key, e);
    }
}

std::vector<EdgeCache::EntryView> EdgeCache::entries() const {
    std::vector<EntryView> out;
    out.reserve(entries_.size());
    for (const auto& [key, e] : entries_) {
        out.push_back({key, e.partition, e.prob, e.delivered, e.pending.size()});
    }
    return out;
}

}  // namespace rich
