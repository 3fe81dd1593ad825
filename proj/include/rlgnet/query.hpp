#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "rlgnet/types.hpp"

namespace rlgnet {

// All queries of one snapshot, scored as one batch. With reverse-augmented
// snapshots this covers both subject- and object-prediction directions.
struct QueryBatch {
    int32_t t_q = 0;
    std::vector<int32_t> subjects;
    std::vector<int32_t> relations;
    std::vector<int32_t> targets;

    int size() const { return static_cast<int>(subjects.size()); }
};

inline QueryBatch batch_from_snapshot(const std::vector<Quadruple>& snapshot, int32_t t) {
    QueryBatch b;
    b.t_q = t;
    b.subjects.reserve(snapshot.size());
    b.relations.reserve(snapshot.size());
    b.targets.reserve(snapshot.size());
    for (const auto& q : snapshot) {
        b.subjects.push_back(q.subject);
        b.relations.push_back(q.relation);
        b.targets.push_back(q.object);
    }
    return b;
}

// (subject, relation) -> objects present in one snapshot; the per-timestamp
// candidate sets C_q^t.
inline std::unordered_map<uint64_t, std::vector<int32_t>> snapshot_candidates(
    const std::vector<Quadruple>& snapshot) {
    std::unordered_map<uint64_t, std::vector<int32_t>> map;
    for (const auto& q : snapshot) {
        const uint64_t key = (static_cast<uint64_t>(static_cast<uint32_t>(q.subject)) << 32) |
                             static_cast<uint32_t>(q.relation);
        map[key].push_back(q.object);
    }
    return map;
}

inline uint64_t query_key(int32_t subject, int32_t relation) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(subject)) << 32) |
           static_cast<uint32_t>(relation);
}

}  // namespace rlgnet
