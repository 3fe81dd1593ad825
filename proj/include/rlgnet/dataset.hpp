#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rlgnet/io_util.hpp"
#include "rlgnet/types.hpp"

namespace rlgnet {

// Time-ordered partition of quadruples into per-timestamp graphs. Snapshot t
// holds exactly the (deduplicated) facts with normalized timestamp t.
struct SnapshotSequence {
    std::vector<std::vector<Quadruple>> snapshots;
    int32_t num_entities = 0;
    int32_t num_relations_raw = 0;
    int32_t valid_start = 0;  // first snapshot index of the validation split
    int32_t test_start = 0;   // first snapshot index of the test split
    bool augmented = false;   // reverse relations added

    int32_t num_snapshots() const { return static_cast<int32_t>(snapshots.size()); }

    int32_t num_relations_total() const {
        return augmented ? 2 * num_relations_raw : num_relations_raw;
    }

    int64_t num_facts() const {
        int64_t n = 0;
        for (const auto& s : snapshots) n += static_cast<int64_t>(s.size());
        return n;
    }
};

namespace detail {

struct RawRecord {
    int32_t subject, relation, object;
    int64_t raw_time;
};

inline void parse_quadruple_file(const std::filesystem::path& path,
                                 int32_t num_entities, int32_t num_relations,
                                 std::vector<RawRecord>& out) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io, "cannot open " + path.string());
    std::string line;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        RawRecord rec{};
        // Trailing columns beyond the fourth are tolerated and ignored; some
        // published ICEWS dumps carry a fifth id column.
        if (!(ss >> rec.subject >> rec.relation >> rec.object >> rec.raw_time))
            throw Error(errc::validation,
                        path.filename().string() + ":" + std::to_string(lineno) +
                            ": malformed record (need 4 integer columns)");
        auto bad = [&](const std::string& what) {
            throw Error(errc::validation,
                        path.filename().string() + ":" + std::to_string(lineno) + ": " + what);
        };
        if (rec.subject < 0 || rec.subject >= num_entities) bad("subject id out of range");
        if (rec.object < 0 || rec.object >= num_entities) bad("object id out of range");
        if (rec.relation < 0 || rec.relation >= num_relations) bad("relation id out of range");
        out.push_back(rec);
    }
}

inline void dedup_snapshots(std::vector<std::vector<Quadruple>>& snaps) {
    for (auto& s : snaps) {
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
    }
}

}  // namespace detail

// Optional name->id map (entity2id.txt / relation2id.txt); used only to label
// reports. Returns an empty vector when the file is absent.
inline std::vector<std::string> load_id_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return {};
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto tab = line.find_last_of('\t');
        if (tab == std::string::npos) continue;
        const std::string name = line.substr(0, tab);
        const int id = std::stoi(line.substr(tab + 1));
        if (id >= static_cast<int>(names.size())) names.resize(id + 1);
        names[id] = name;
    }
    return names;
}

// Loads <root>/<name>/{train,valid,test}.txt plus stat.txt. Raw timestamps are
// divided by the dataset time gap (inferred as the minimum positive difference
// between distinct raw timestamps) and densified so snapshot indices are
// contiguous from 0. Split boundaries come from file membership.
inline SnapshotSequence load_dataset(const std::filesystem::path& root,
                                     const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path dir = root / name;
    const fs::path stat_path = dir / "stat.txt";
    std::ifstream stat(stat_path);
    if (!stat) throw Error(errc::io, "cannot open " + stat_path.string());
    int32_t num_entities = 0, num_relations = 0;
    if (!(stat >> num_entities >> num_relations) || num_entities <= 0 || num_relations <= 0)
        throw Error(errc::validation, stat_path.string() + ": expected two positive integers");

    std::vector<detail::RawRecord> train, valid, test;
    detail::parse_quadruple_file(dir / "train.txt", num_entities, num_relations, train);
    detail::parse_quadruple_file(dir / "valid.txt", num_entities, num_relations, valid);
    detail::parse_quadruple_file(dir / "test.txt", num_entities, num_relations, test);
    if (train.empty())
        throw Error(errc::validation, (dir / "train.txt").string() + ": no records (no timestamps to index)");

    std::vector<int64_t> times;
    for (const auto* split : {&train, &valid, &test})
        for (const auto& r : *split) times.push_back(r.raw_time);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    int64_t gap = 0;
    for (size_t i = 1; i < times.size(); ++i) {
        const int64_t d = times[i] - times[i - 1];
        if (gap == 0 || d < gap) gap = d;
    }
    if (gap == 0) gap = 1;  // single distinct timestamp

    // Divide by the gap, then densify to remove any remaining holes.
    std::map<int64_t, int32_t> dense;
    for (int64_t t : times) dense.emplace(t / gap, 0);
    int32_t next = 0;
    for (auto& [raw, idx] : dense) idx = next++;

    SnapshotSequence seq;
    seq.num_entities = num_entities;
    seq.num_relations_raw = num_relations;
    seq.snapshots.resize(next);
    auto bucket = [&](const std::vector<detail::RawRecord>& split, int32_t* first) {
        int32_t lo = next;
        for (const auto& r : split) {
            const int32_t t = dense.at(r.raw_time / gap);
            seq.snapshots[t].push_back(Quadruple{r.subject, r.relation, r.object, t});
            lo = std::min(lo, t);
        }
        if (first) *first = split.empty() ? next : lo;
    };
    bucket(train, nullptr);
    bucket(valid, &seq.valid_start);
    bucket(test, &seq.test_start);
    if (valid.empty()) seq.valid_start = seq.test_start;
    detail::dedup_snapshots(seq.snapshots);
    if (!(0 <= seq.valid_start && seq.valid_start <= seq.test_start &&
          seq.test_start <= seq.num_snapshots()))
        throw Error(errc::validation, name + ": split boundaries are not monotone");
    return seq;
}

// For every (s, r, o, t) adds (o, r + |R|, s, t). Total per snapshot is exactly
// 2x the input; self-loops produce their own distinct reverse fact.
inline SnapshotSequence add_reverse_relations(const SnapshotSequence& seq) {
    if (seq.augmented)
        throw Error(errc::validation, "add_reverse_relations: sequence is already augmented");
    SnapshotSequence out = seq;
    out.augmented = true;
    const int32_t r_off = seq.num_relations_raw;
    for (auto& snap : out.snapshots) {
        const size_t n = snap.size();
        snap.reserve(2 * n);
        for (size_t i = 0; i < n; ++i) {
            const Quadruple& q = snap[i];
            snap.push_back(Quadruple{q.object, q.relation + r_off, q.subject, q.timestamp});
        }
        std::sort(snap.begin(), snap.end());
        snap.erase(std::unique(snap.begin(), snap.end()), snap.end());
    }
    return out;
}

inline constexpr const char* kSeqMagic = "RLGSEQ01";

inline void save_sequence(const SnapshotSequence& seq, std::ostream& os) {
    os.write(kSeqMagic, 8);
    io::write_pod<int32_t>(os, seq.num_entities);
    io::write_pod<int32_t>(os, seq.num_relations_raw);
    io::write_pod<int32_t>(os, seq.valid_start);
    io::write_pod<int32_t>(os, seq.test_start);
    io::write_pod<uint8_t>(os, seq.augmented ? 1 : 0);
    io::write_pod<int32_t>(os, seq.num_snapshots());
    for (const auto& snap : seq.snapshots) {
        io::write_pod<uint64_t>(os, snap.size());
        for (const auto& q : snap) {
            io::write_pod<int32_t>(os, q.subject);
            io::write_pod<int32_t>(os, q.relation);
            io::write_pod<int32_t>(os, q.object);
            io::write_pod<int32_t>(os, q.timestamp);
        }
    }
}

inline SnapshotSequence load_sequence(std::istream& is) {
    io::expect_magic(is, kSeqMagic, "snapshot sequence");
    SnapshotSequence seq;
    seq.num_entities = io::read_pod<int32_t>(is);
    seq.num_relations_raw = io::read_pod<int32_t>(is);
    seq.valid_start = io::read_pod<int32_t>(is);
    seq.test_start = io::read_pod<int32_t>(is);
    seq.augmented = io::read_pod<uint8_t>(is) != 0;
    const int32_t n = io::read_pod<int32_t>(is);
    seq.snapshots.resize(n);
    for (auto& snap : seq.snapshots) {
        const auto m = io::read_pod<uint64_t>(is);
        snap.resize(m);
        for (auto& q : snap) {
            q.subject = io::read_pod<int32_t>(is);
            q.relation = io::read_pod<int32_t>(is);
            q.object = io::read_pod<int32_t>(is);
            q.timestamp = io::read_pod<int32_t>(is);
        }
    }
    return seq;
}

}  // namespace rlgnet
