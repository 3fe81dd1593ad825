#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rlgnet/global_module.hpp"
#include "rlgnet/history.hpp"
#include "rlgnet/local_module.hpp"
#include "rlgnet/query.hpp"
#include "rlgnet/repeat_module.hpp"

namespace rlgnet {

using Vec = Eigen::VectorXd;

enum class EvalMode { single_step, multi_step };
enum class FusionStrategy { probability, raw };

inline std::string to_string(EvalMode m) {
    return m == EvalMode::single_step ? "single_step" : "multi_step";
}
inline std::string to_string(FusionStrategy f) {
    return f == FusionStrategy::probability ? "probability" : "raw";
}

struct EnsembleConfig {
    double alpha = 0.8;
    EvalMode mode = EvalMode::single_step;
    std::vector<int> k_list{1, 3, 10};
    FusionStrategy fusion = FusionStrategy::probability;
    bool unfiltered_also = false;
};

struct TimestampRow {
    int32_t t = 0;
    int64_t num_queries = 0;
    double mrr = 0.0;
};

struct EvalReport {
    std::string combo;
    std::string mode;
    std::string fusion;
    double alpha = 0.0;
    int64_t num_queries = 0;
    double mrr = 0.0;
    std::map<int, double> hits;
    std::map<std::string, double> module_mrr;  // solo-module contributions
    std::vector<TimestampRow> per_timestamp;
    double mrr_unfiltered = -1.0;          // set when unfiltered_also
    int32_t max_history_frontier = -1;     // latest index frontier observed while scoring
    int32_t max_local_history_end = -1;    // latest snapshot (exclusive) fed to the local window
};

inline Vec softmax(const Vec& x) {
    const double mx = x.maxCoeff();
    Vec e = (x.array() - mx).exp();
    return e / e.sum();
}

// Softmax over the nonzero support of a sparse score vector; exact zeros
// elsewhere. An all-zero input stays all-zero.
inline Vec masked_softmax(const Vec& x) {
    std::vector<int> support;
    for (int i = 0; i < x.size(); ++i)
        if (x[i] != 0.0) support.push_back(i);
    Vec out = Vec::Zero(x.size());
    if (support.empty()) return out;
    double mx = x[support[0]];
    for (int i : support) mx = std::max(mx, x[i]);
    double z = 0.0;
    for (int i : support) z += std::exp(x[i] - mx);
    for (int i : support) out[i] = std::exp(x[i] - mx) / z;
    return out;
}

// Eq.-20 fusion. In probability mode local/global scores become simplexes and
// the repeat vector is normalized over its nonzero support, preserving the
// zero-outside-candidates property; raw mode sums logits directly.
inline Vec fuse_scores(const Vec& loc, const Vec& glo, const Vec& rep, double alpha,
                       FusionStrategy strategy = FusionStrategy::probability) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error(errc::config, "alpha must lie in [0, 1]");
    if (loc.size() != glo.size() || loc.size() != rep.size())
        throw Error(errc::validation, "fuse_scores: score lengths differ");
    if (strategy == FusionStrategy::raw)
        return alpha * loc + (1.0 - alpha) * glo + rep;
    return alpha * softmax(loc) + (1.0 - alpha) * softmax(glo) + masked_softmax(rep);
}

// Time-aware filtered rank: other true objects for the same (s, r, t) are
// removed from consideration; ties break optimistically (strictly-greater
// counting).
inline int rank_time_aware_filtered(const Vec& scores, int truth,
                                    const std::vector<int>& other_true_objects) {
    if (truth < 0 || truth >= scores.size())
        throw Error(errc::validation, "rank: truth entity outside the entity universe");
    std::vector<char> removed(static_cast<size_t>(scores.size()), 0);
    for (int o : other_true_objects)
        if (o != truth) removed[static_cast<size_t>(o)] = 1;
    const double st = scores[truth];
    int rank = 1;
    for (int e = 0; e < scores.size(); ++e)
        if (e != truth && !removed[static_cast<size_t>(e)] && scores[e] > st) ++rank;
    return rank;
}

inline int rank_unfiltered(const Vec& scores, int truth) {
    const double st = scores[truth];
    int rank = 1;
    for (int e = 0; e < scores.size(); ++e)
        if (e != truth && scores[e] > st) ++rank;
    return rank;
}

struct Ensemble {
    const LocalModule* local = nullptr;
    const GlobalModule* global = nullptr;
    const RepeatModule* repeat = nullptr;

    std::string combo_name() const {
        std::string s;
        auto add = [&](const char* n) {
            if (!s.empty()) s += "+";
            s += n;
        };
        if (local) add("local");
        if (global) add("global");
        if (repeat) add("repeat");
        return s.empty() ? "(none)" : s;
    }
};

// Entity-prediction evaluation over snapshots [eval_start, eval_end) with
// time-aware filtered metrics. single_step ingests each evaluated snapshot's
// ground truth before moving to the next timestamp; multi_step freezes all
// history (candidate index and local window) at eval_start.
inline EvalReport evaluate(const Ensemble& ens, const SnapshotSequence& seq,
                           const EnsembleConfig& cfg, int32_t eval_start = -1,
                           int32_t eval_end = -1) {
    if (!seq.augmented)
        throw Error(errc::validation, "evaluate: sequence must be reverse-augmented");
    if (!ens.local && !ens.global && !ens.repeat)
        throw Error(errc::unsupported, "evaluate: no modules supplied");
    if (!ens.local && !ens.global)
        throw Error(errc::unsupported,
                    "evaluate: the repeat module alone can only predict repeating facts");
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0))
        throw Error(errc::config, "alpha must lie in [0, 1]");

    if (eval_start < 0) eval_start = seq.test_start;
    if (eval_end < 0) eval_end = seq.num_snapshots();

    // Fusion weight restricted to the present modules.
    double alpha = cfg.alpha;
    if (!ens.global) alpha = 1.0;
    if (!ens.local) alpha = 0.0;

    CandidateIndex index = build_index(seq, eval_start);
    if (cfg.mode == EvalMode::multi_step) index.freeze();

    EvalReport report;
    report.combo = ens.combo_name();
    report.mode = to_string(cfg.mode);
    report.fusion = to_string(cfg.fusion);
    report.alpha = alpha;

    const int32_t E = seq.num_entities;
    double rr_sum = 0.0, rr_unf_sum = 0.0;
    std::map<int, int64_t> hit_counts;
    for (int k : cfg.k_list) hit_counts[k] = 0;
    double rr_local = 0.0, rr_global = 0.0, rr_repeat = 0.0;
    int64_t n_repeating = 0;

    for (int32_t t = eval_start; t < eval_end && t < seq.num_snapshots(); ++t) {
        const auto& snapshot = seq.snapshots[t];
        if (snapshot.empty()) continue;
        const QueryBatch batch = batch_from_snapshot(snapshot, t);
        const int B = batch.size();

        const int32_t history_end = cfg.mode == EvalMode::single_step ? t : eval_start;
        report.max_history_frontier = std::max(report.max_history_frontier, index.frontier());
        report.max_local_history_end = std::max(report.max_local_history_end, history_end);

        Mat loc, glo, rep;
        if (ens.local) loc = ens.local->score_eval(seq, batch, history_end);
        if (ens.global) glo = ens.global->score_eval(batch, index);
        if (ens.repeat) rep = ens.repeat->score_eval(batch, index);

        const auto truth_map = snapshot_candidates(snapshot);
        double rr_t = 0.0;
        for (int i = 0; i < B; ++i) {
            const Vec loc_row = ens.local ? Vec(loc.row(i).transpose()) : Vec(Vec::Zero(E));
            const Vec glo_row = ens.global ? Vec(glo.row(i).transpose()) : Vec(Vec::Zero(E));
            const Vec rep_row = ens.repeat ? Vec(rep.row(i).transpose()) : Vec(Vec::Zero(E));
            const Vec fused = fuse_scores(loc_row, glo_row, rep_row, alpha, cfg.fusion);

            const auto& others =
                truth_map.at(query_key(batch.subjects[i], batch.relations[i]));
            std::vector<int> other_ids(others.begin(), others.end());
            const int truth = batch.targets[i];
            const int rank = rank_time_aware_filtered(fused, truth, other_ids);
            rr_sum += 1.0 / rank;
            rr_t += 1.0 / rank;
            for (auto& [k, c] : hit_counts)
                if (rank <= k) ++c;
            if (cfg.unfiltered_also) rr_unf_sum += 1.0 / rank_unfiltered(fused, truth);

            if (ens.local)
                rr_local += 1.0 / rank_time_aware_filtered(loc_row, truth, other_ids);
            if (ens.global)
                rr_global += 1.0 / rank_time_aware_filtered(glo_row, truth, other_ids);
            if (ens.repeat && rep_row[truth] != 0.0) {
                ++n_repeating;
                rr_repeat += 1.0 / rank_time_aware_filtered(rep_row, truth, other_ids);
            }
            ++report.num_queries;
        }
        report.per_timestamp.push_back({t, B, rr_t / B});

        if (cfg.mode == EvalMode::single_step) index.ingest_snapshot(snapshot, t);
    }

    if (report.num_queries == 0)
        throw Error(errc::validation, "evaluate: no queries in the evaluation span");

    report.mrr = rr_sum / static_cast<double>(report.num_queries);
    for (int k : cfg.k_list)
        report.hits[k] = static_cast<double>(hit_counts[k]) / static_cast<double>(report.num_queries);
    if (cfg.unfiltered_also)
        report.mrr_unfiltered = rr_unf_sum / static_cast<double>(report.num_queries);
    if (ens.local) report.module_mrr["local"] = rr_local / static_cast<double>(report.num_queries);
    if (ens.global) report.module_mrr["global"] = rr_global / static_cast<double>(report.num_queries);
    if (ens.repeat && n_repeating > 0)
        report.module_mrr["repeat_on_repeating"] = rr_repeat / static_cast<double>(n_repeating);
    return report;
}

// Table-4 style ablation: evaluate a nonempty subset of the trained modules.
// The repeat module alone is rejected.
inline EvalReport ablate(const Ensemble& subset, const SnapshotSequence& seq,
                         const EnsembleConfig& cfg) {
    return evaluate(subset, seq, cfg);
}

}  // namespace rlgnet
