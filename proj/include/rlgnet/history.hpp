#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "rlgnet/dataset.hpp"
#include "rlgnet/io_util.hpp"
#include "rlgnet/types.hpp"

namespace rlgnet {

// Pass as k to mean "no truncation".
inline constexpr int32_t kNoTruncation = std::numeric_limits<int32_t>::max();

// Per-object statistics for one (subject, relation) key: how often the object
// appeared and when it was last seen. Zero-count objects are never stored.
struct FrequencyRecencyRecord {
    int32_t object = 0;
    int32_t count = 0;
    int32_t last_seen = 0;

    friend bool operator==(const FrequencyRecencyRecord&,
                           const FrequencyRecencyRecord&) = default;
};

// Fixed tie-break for equal counts: more recent last_seen first, then smaller
// entity id. A strict total order, so top-k lists are prefixes of each other.
inline bool candidate_order(const FrequencyRecencyRecord& a,
                            const FrequencyRecencyRecord& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.last_seen != b.last_seen) return a.last_seen > b.last_seen;
    return a.object < b.object;
}

// Historical candidate statistics per (subject, relation) key. The only
// permitted mutation is ingesting snapshots in increasing timestamp order;
// facts at times >= frontier() are never visible to queries.
class CandidateIndex {
public:
    int32_t frontier() const { return frontier_; }
    bool frozen() const { return frozen_; }
    void freeze() { frozen_ = true; }
    size_t num_keys() const { return table_.size(); }

    void ingest_snapshot(const std::vector<Quadruple>& snapshot, int32_t t) {
        if (frozen_) throw Error(errc::ordering, "candidate index is frozen");
        if (t != frontier_)
            throw Error(errc::ordering,
                        "out-of-order ingestion: snapshot t=" + std::to_string(t) +
                            ", frontier=" + std::to_string(frontier_));
        for (const auto& q : snapshot) {
            if (q.timestamp != t)
                throw Error(errc::validation,
                            "snapshot contains quadruple with timestamp " +
                                std::to_string(q.timestamp) + " != " + std::to_string(t));
            auto& records = table_[key(q.subject, q.relation)];
            auto it = std::find_if(records.begin(), records.end(),
                                   [&](const auto& r) { return r.object == q.object; });
            if (it == records.end())
                records.push_back({q.object, 1, t});
            else {
                it->count += 1;
                it->last_seen = t;
            }
        }
        frontier_ = t + 1;
    }

    // At most k records sorted by candidate_order; k = kNoTruncation returns
    // all. Unknown keys yield an empty list.
    std::vector<FrequencyRecencyRecord> top_k_candidates(int32_t subject, int32_t relation,
                                                         int32_t k) const {
        auto it = table_.find(key(subject, relation));
        if (it == table_.end()) return {};
        std::vector<FrequencyRecencyRecord> out = it->second;
        std::sort(out.begin(), out.end(), candidate_order);
        if (k != kNoTruncation && static_cast<size_t>(k) < out.size())
            out.resize(static_cast<size_t>(k));
        return out;
    }

    // Membership of `object` in the key's top-k list, without materializing a
    // sorted copy when k does not truncate.
    bool in_top_k(int32_t subject, int32_t relation, int32_t object, int32_t k) const {
        auto it = table_.find(key(subject, relation));
        if (it == table_.end()) return false;
        const auto& records = it->second;
        if (k == kNoTruncation || static_cast<size_t>(k) >= records.size()) {
            return std::any_of(records.begin(), records.end(),
                               [&](const auto& r) { return r.object == object; });
        }
        auto self = std::find_if(records.begin(), records.end(),
                                 [&](const auto& r) { return r.object == object; });
        if (self == records.end()) return false;
        // Rank of `object` under the total order == number of records ahead of it.
        int32_t ahead = 0;
        for (const auto& r : records)
            if (r.object != object && candidate_order(r, *self)) ++ahead;
        return ahead < k;
    }

    static constexpr const char* kMagic = "RLGIDX01";

    void save(std::ostream& os) const {
        os.write(kMagic, 8);
        io::write_pod<int32_t>(os, frontier_);
        io::write_pod<uint64_t>(os, table_.size());
        std::vector<uint64_t> keys;
        keys.reserve(table_.size());
        for (const auto& [k, _] : table_) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        for (uint64_t k : keys) {
            const auto& records = table_.at(k);
            io::write_pod<uint64_t>(os, k);
            io::write_pod<uint64_t>(os, records.size());
            std::vector<FrequencyRecencyRecord> sorted = records;
            std::sort(sorted.begin(), sorted.end(), candidate_order);
            for (const auto& r : sorted) {
                io::write_pod<int32_t>(os, r.object);
                io::write_pod<int32_t>(os, r.count);
                io::write_pod<int32_t>(os, r.last_seen);
            }
        }
    }

    static CandidateIndex load(std::istream& is) {
        io::expect_magic(is, kMagic, "candidate index");
        CandidateIndex idx;
        idx.frontier_ = io::read_pod<int32_t>(is);
        const auto n = io::read_pod<uint64_t>(is);
        idx.table_.reserve(n);
        for (uint64_t i = 0; i < n; ++i) {
            const auto k = io::read_pod<uint64_t>(is);
            const auto m = io::read_pod<uint64_t>(is);
            auto& records = idx.table_[k];
            records.resize(m);
            for (auto& r : records) {
                r.object = io::read_pod<int32_t>(is);
                r.count = io::read_pod<int32_t>(is);
                r.last_seen = io::read_pod<int32_t>(is);
            }
        }
        return idx;
    }

private:
    static uint64_t key(int32_t subject, int32_t relation) {
        return (static_cast<uint64_t>(static_cast<uint32_t>(subject)) << 32) |
               static_cast<uint32_t>(relation);
    }

    int32_t frontier_ = 0;
    bool frozen_ = false;
    std::unordered_map<uint64_t, std::vector<FrequencyRecencyRecord>> table_;
};

// Per-timestamp subsets of G_raw whose object already sits in the query key's
// top-k historical candidates.
struct RepeatingGraph {
    std::vector<std::vector<Quadruple>> snapshots;

    int64_t num_facts() const {
        int64_t n = 0;
        for (const auto& s : snapshots) n += static_cast<int64_t>(s.size());
        return n;
    }
};

inline RepeatingGraph build_repeating_graph(const SnapshotSequence& seq, int32_t k) {
    RepeatingGraph rep;
    rep.snapshots.resize(seq.num_snapshots());
    CandidateIndex index;
    for (int32_t t = 0; t < seq.num_snapshots(); ++t) {
        for (const auto& q : seq.snapshots[t])
            if (index.in_top_k(q.subject, q.relation, q.object, k))
                rep.snapshots[t].push_back(q);
        index.ingest_snapshot(seq.snapshots[t], t);
    }
    return rep;
}

// 100 * |G_rep| / |G_raw| over the whole sequence, with per-fact history being
// all strictly earlier timestamps.
inline double repeating_proportion(const SnapshotSequence& seq, int32_t k) {
    const int64_t total = seq.num_facts();
    if (total == 0) return 0.0;
    const RepeatingGraph rep = build_repeating_graph(seq, k);
    return 100.0 * static_cast<double>(rep.num_facts()) / static_cast<double>(total);
}

// Builds an index covering snapshots [0, end) of the sequence.
inline CandidateIndex build_index(const SnapshotSequence& seq, int32_t end) {
    CandidateIndex index;
    for (int32_t t = 0; t < end && t < seq.num_snapshots(); ++t)
        index.ingest_snapshot(seq.snapshots[t], t);
    return index;
}

}  // namespace rlgnet
