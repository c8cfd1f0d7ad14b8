#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace rich {

enum class CachePartition { prefetch, standard };

struct ChunkKey {
    int content = 0;
    long long chunk = 0;
    auto operator<=>(const ChunkKey&) const = default;
};

// Bounded per-EN chunk store. Capacity is shared by both partitions; each
// entry is one chunk. Eviction removes delivered entries first, lowest
// download probability first; undelivered entries follow in the same order.
class EdgeCache {
public:
    EdgeCache(std::string en_id, long long capacity);

    enum class InsertResult { inserted, merged, rejected };

    // Duplicate keys merge pending sets and keep the higher probability.
    // When full, delivered entries are evicted to make room; failing that,
    // the incoming chunk displaces the lowest-probability undelivered
    // resident only if its own probability is strictly higher.
    InsertResult insert(ChunkKey key, CachePartition partition, double download_prob,
                        std::span<const int> pending_cars, bool delivered_hint = false);

    struct Hit {
        CachePartition partition;
    };
    // A hit serves any car, planned-for or not; car_id is dropped from the
    // entry's pending set, and the entry becomes delivered once no car is
    // still expected.
    std::optional<Hit> lookup(ChunkKey key, int car_id);

    // Frees at least space_needed slots if possible; returns the evicted
    // keys in eviction order.
    std::vector<ChunkKey> evict_for(long long space_needed);

    // Car left coverage: it is no longer expected anywhere in this cache.
    void release_car(int car_id);

    bool contains(ChunkKey key) const { return entries_.count(key) != 0; }
    long long size() const { return static_cast<long long>(entries_.size()); }
    long long capacity() const { return capacity_; }
    const std::string& en_id() const { return en_id_; }

    struct EntryView {
        ChunkKey key;
        CachePartition partition;
        double download_prob = 0.0;
        bool delivered = false;
        std::size_t pending_count = 0;
    };
    std::vector<EntryView> entries() const;
    long long delivered_count() const { return static_cast<long long>(delivered_order_.size()); }

private:
    struct Entry {
        CachePartition partition;
        double prob = 0.0;
        std::vector<int> pending;  // sorted car ids
        bool delivered = false;
        bool served_or_abandoned = false;  // a delivery happened or all pending cars left
    };

    using Rank = std::tuple<double, ChunkKey>;  // (prob, key): ascending = evict first

    std::string en_id_;
    long long capacity_;
    std::map<ChunkKey, Entry> entries_;
    std::set<Rank> delivered_order_;
    std::set<Rank> undelivered_order_;

    void refresh_delivered(ChunkKey key, Entry& e);
    void erase_entry(ChunkKey key, const Entry& e);
};

}  // namespace rich
