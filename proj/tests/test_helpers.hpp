#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "rlgnet/dataset.hpp"
#include "rlgnet/history.hpp"
#include "rlgnet/nn.hpp"

namespace rlgnet::test {

// Random augmented sequence for property tests. Split boundaries default to
// 80/10/10 over timestamps.
inline SnapshotSequence random_sequence(std::mt19937_64& rng, int entities, int relations_raw,
                                        int timestamps, int facts_per_snapshot,
                                        bool augment = true) {
    std::uniform_int_distribution<int> ent(0, entities - 1);
    std::uniform_int_distribution<int> rel(0, relations_raw - 1);
    SnapshotSequence seq;
    seq.num_entities = entities;
    seq.num_relations_raw = relations_raw;
    seq.snapshots.resize(timestamps);
    for (int t = 0; t < timestamps; ++t) {
        std::set<std::tuple<int, int, int>> seen;
        while (static_cast<int>(seen.size()) < facts_per_snapshot)
            seen.insert({ent(rng), rel(rng), ent(rng)});
        for (const auto& [s, r, o] : seen)
            seq.snapshots[t].push_back(Quadruple{s, r, o, t});
        std::sort(seq.snapshots[t].begin(), seq.snapshots[t].end());
    }
    seq.valid_start = std::max(1, timestamps * 8 / 10);
    seq.test_start = std::max(seq.valid_start, timestamps * 9 / 10);
    return augment ? add_reverse_relations(seq) : seq;
}

// Writes a dataset directory in the standard raw-file layout.
inline void write_dataset_files(const std::filesystem::path& dir,
                                const std::vector<std::vector<Quadruple>>& snaps,
                                int entities, int relations, int valid_start, int test_start,
                                int64_t gap = 24) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto dump = [&](const char* name, int lo, int hi) {
        std::ofstream os(dir / name);
        for (int t = lo; t < hi && t < static_cast<int>(snaps.size()); ++t)
            for (const auto& q : snaps[t])
                os << q.subject << "\t" << q.relation << "\t" << q.object << "\t" << t * gap
                   << "\n";
    };
    dump("train.txt", 0, valid_start);
    dump("valid.txt", valid_start, test_start);
    dump("test.txt", test_start, static_cast<int>(snaps.size()));
    std::ofstream stat(dir / "stat.txt");
    stat << entities << " " << relations << "\n";
}

inline std::filesystem::path temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("rlgnet_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Central finite differences for sampled entries of one parameter, against
// the analytic gradient left in p.grad by a prior backward().
struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst;
};

inline double rel_err(double a, double b) {
    const double denom = std::max(std::abs(a) + std::abs(b), 1e-6);
    return std::abs(a - b) / denom;
}

// loss() must rebuild the whole forward pass from current parameter values.
inline GradCheckResult finite_difference_check(ad::Parameter& p,
                                               const std::function<double()>& loss,
                                               std::mt19937_64& rng, int samples = 6,
                                               double h = 1e-5) {
    GradCheckResult result;
    const Eigen::Index size = p.value.size();
    std::uniform_int_distribution<Eigen::Index> pick(0, size - 1);
    std::set<Eigen::Index> chosen;
    while (static_cast<int>(chosen.size()) < std::min<Eigen::Index>(samples, size))
        chosen.insert(pick(rng));
    for (Eigen::Index idx : chosen) {
        double* slot = p.value.data() + idx;
        const double saved = *slot;
        *slot = saved + h;
        const double up = loss();
        *slot = saved - h;
        const double down = loss();
        *slot = saved;
        const double fd = (up - down) / (2.0 * h);
        const double an = p.grad.data()[idx];
        const double e = rel_err(fd, an);
        if (e > result.max_rel_err) {
            result.max_rel_err = e;
            result.worst = p.name + "[" + std::to_string(idx) + "]: fd=" + std::to_string(fd) +
                           " analytic=" + std::to_string(an);
        }
    }
    return result;
}

}  // namespace rlgnet::test
