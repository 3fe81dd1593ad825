#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rlgnet/checkpoint.hpp"
#include "rlgnet/eval.hpp"
#include "rlgnet/global_module.hpp"
#include "rlgnet/history.hpp"
#include "rlgnet/local_module.hpp"
#include "rlgnet/repeat_module.hpp"

namespace rlgnet {

enum class ModuleId { local, global, repeat };

inline std::string module_name(ModuleId id) {
    switch (id) {
        case ModuleId::local: return "local";
        case ModuleId::global: return "global";
        case ModuleId::repeat: return "repeat";
    }
    return "?";
}

inline ModuleId module_from_name(const std::string& name) {
    if (name == "local") return ModuleId::local;
    if (name == "global") return ModuleId::global;
    if (name == "repeat") return ModuleId::repeat;
    throw Error(errc::config, "unknown module '" + name + "' (local|global|repeat)");
}

struct TrainConfig {
    ModuleId module = ModuleId::local;
    double lr = 0.001;
    double lr_decay = 0.8;  // StepLR factor, local module only
    int lr_step = 10;       // epochs between decays
    int max_epochs = 30;
    int early_stop = 5;  // non-improving validations before stopping
    double grad_clip = 1.0;
    uint64_t seed = 0;
    int top_k = 20;  // G_rep truncation for the repeat module
    // Accepted for configuration parity with the published setup; this
    // artifact does not define the constraint and the flag changes nothing.
    bool static_graph_constraint = false;
    std::function<void(const std::string&)> log_sink;  // optional progress lines
};

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double val_mrr = 0.0;
    double lr = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    CheckpointMeta best;
    std::vector<EpochLog> log;
};

// Plain (tape-free) Eq.-19 loss, mean of -log softmax(scores_row)[target].
inline double cross_entropy_loss(const Mat& scores, const std::vector<int>& targets) {
    if (static_cast<size_t>(scores.rows()) != targets.size())
        throw Error(errc::validation, "cross_entropy_loss: batch size mismatch");
    double loss = 0.0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const double mx = scores.row(i).maxCoeff();
        const double z = (scores.row(i).array() - mx).exp().sum();
        loss += std::log(z) + mx - scores(i, targets[static_cast<size_t>(i)]);
    }
    return loss / static_cast<double>(scores.rows());
}

namespace detail {

// Shared epoch loop. `score` builds the training graph for one snapshot
// batch; `validate` returns the module's validation MRR after an epoch.
template <typename ScoreFn, typename ValidateFn>
TrainResult train_engine(nn::ParamStore& store, const SnapshotSequence& seq,
                         const TrainConfig& cfg,
                         const std::vector<std::vector<Quadruple>>& query_snapshots,
                         ScoreFn&& score, ValidateFn&& validate) {
    if (!seq.augmented)
        throw Error(errc::validation, "training expects a reverse-augmented sequence");
    nn::AdamOptimizer opt(cfg.lr);
    std::mt19937_64 dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    TrainResult result;
    result.best.module_id = module_name(cfg.module);
    result.best.val_mrr = -1.0;
    std::vector<Mat> best_values;
    int stale = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto start_time = std::chrono::steady_clock::now();
        CandidateIndex index;
        double loss_sum = 0.0;
        int64_t query_count = 0;

        for (int32_t t = 0; t < seq.valid_start; ++t) {
            const auto& queries = query_snapshots[t];
            if (!queries.empty()) {
                const QueryBatch batch = batch_from_snapshot(queries, t);
                Tape tape(true);
                Var scores = score(tape, batch, index, dropout_rng);
                Var loss = tape.cross_entropy_mean(scores, std::vector<int>(batch.targets.begin(),
                                                                            batch.targets.end()));
                const double loss_value = tape.val(loss)(0, 0);
                if (!std::isfinite(loss_value))
                    throw Error(errc::diverged,
                                "non-finite loss at epoch " + std::to_string(epoch) +
                                    ", snapshot " + std::to_string(t));
                tape.backward(loss);
                nn::AdamOptimizer::clip_global_norm(store, cfg.grad_clip);
                opt.step(store);
                loss_sum += loss_value * batch.size();
                query_count += batch.size();
            }
            index.ingest_snapshot(seq.snapshots[t], t);
        }

        const double val_mrr = validate();
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
        const double mean_loss = query_count ? loss_sum / static_cast<double>(query_count) : 0.0;
        result.log.push_back({epoch, mean_loss, val_mrr, opt.learning_rate(), seconds});
        if (cfg.log_sink)
            cfg.log_sink("epoch " + std::to_string(epoch) + " loss " + std::to_string(mean_loss) +
                         " val_mrr " + std::to_string(val_mrr) + " lr " +
                         std::to_string(opt.learning_rate()));

        if (val_mrr > result.best.val_mrr) {
            result.best.val_mrr = val_mrr;
            result.best.epoch = epoch;
            best_values.clear();
            for (const auto& p : store.all()) best_values.push_back(p->value);
            stale = 0;
        } else if (++stale >= cfg.early_stop) {
            break;
        }

        if (cfg.module == ModuleId::local && (epoch + 1) % cfg.lr_step == 0)
            opt.set_learning_rate(opt.learning_rate() * cfg.lr_decay);
    }

    if (!best_values.empty()) {
        size_t i = 0;
        for (const auto& p : store.all()) p->value = best_values[i++];
    }
    return result;
}

}  // namespace detail

inline TrainResult train_local(LocalModule& module, const SnapshotSequence& seq,
                               const TrainConfig& cfg) {
    auto score = [&](Tape& t, const QueryBatch& b, const CandidateIndex&,
                     std::mt19937_64& rng) {
        return module.score_batch(t, seq, b, b.t_q,
                                  module.config().dropout > 0 ? &rng : nullptr);
    };
    auto validate = [&] {
        if (seq.valid_start >= seq.test_start) return 0.0;
        EnsembleConfig ec;
        ec.alpha = 1.0;
        ec.mode = EvalMode::single_step;
        return evaluate(Ensemble{.local = &module}, seq, ec, seq.valid_start, seq.test_start).mrr;
    };
    return detail::train_engine(module.params(), seq, cfg, seq.snapshots, score, validate);
}

inline TrainResult train_global(GlobalModule& module, const SnapshotSequence& seq,
                                const TrainConfig& cfg) {
    auto score = [&](Tape& t, const QueryBatch& b, const CandidateIndex& index,
                     std::mt19937_64& rng) {
        return module.score_batch(t, b, index, module.config().dropout > 0 ? &rng : nullptr);
    };
    auto validate = [&] {
        if (seq.valid_start >= seq.test_start) return 0.0;
        EnsembleConfig ec;
        ec.alpha = 0.0;
        ec.mode = EvalMode::single_step;
        return evaluate(Ensemble{.global = &module}, seq, ec, seq.valid_start, seq.test_start).mrr;
    };
    return detail::train_engine(module.params(), seq, cfg, seq.snapshots, score, validate);
}

// Validation MRR of the repeat module over the repeating facts of a span;
// non-candidates score zero, so only G_rep queries are meaningful.
inline double repeat_validation_mrr(const RepeatModule& module, const SnapshotSequence& seq,
                                    const RepeatingGraph& rep, int32_t begin, int32_t end) {
    CandidateIndex index = build_index(seq, begin);
    double rr = 0.0;
    int64_t n = 0;
    for (int32_t t = begin; t < end && t < seq.num_snapshots(); ++t) {
        if (!rep.snapshots[t].empty()) {
            const QueryBatch batch = batch_from_snapshot(rep.snapshots[t], t);
            const Mat scores = module.score_eval(batch, index);
            const auto truth_map = snapshot_candidates(seq.snapshots[t]);
            for (int i = 0; i < batch.size(); ++i) {
                const auto& others =
                    truth_map.at(query_key(batch.subjects[i], batch.relations[i]));
                const int rank = rank_time_aware_filtered(
                    scores.row(i).transpose(), batch.targets[i],
                    std::vector<int>(others.begin(), others.end()));
                rr += 1.0 / rank;
                ++n;
            }
        }
        index.ingest_snapshot(seq.snapshots[t], t);
    }
    return n ? rr / static_cast<double>(n) : 0.0;
}

// The repeat module trains only on G_rep (Eq. 2 with the configured top_k).
inline TrainResult train_repeat(RepeatModule& module, const SnapshotSequence& seq,
                                const TrainConfig& cfg) {
    const RepeatingGraph rep = build_repeating_graph(seq, cfg.top_k);
    auto score = [&](Tape& t, const QueryBatch& b, const CandidateIndex& index,
                     std::mt19937_64&) { return module.score_batch(t, b, index); };
    auto validate = [&] {
        if (seq.valid_start >= seq.test_start) return 0.0;
        return repeat_validation_mrr(module, seq, rep, seq.valid_start, seq.test_start);
    };
    return detail::train_engine(module.params(), seq, cfg, rep.snapshots, score, validate);
}

}  // namespace rlgnet
