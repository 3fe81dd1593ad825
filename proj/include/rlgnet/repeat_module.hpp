#pragma once

#include <random>
#include <vector>

#include "rlgnet/history.hpp"
#include "rlgnet/nn.hpp"
#include "rlgnet/query.hpp"
#include "rlgnet/tape.hpp"

namespace rlgnet {

using ad::Mat;
using ad::Tape;
using ad::Var;

struct RepeatConfig {
    int32_t num_entities = 0;
    int32_t num_relations = 0;  // total, after reverse augmentation
    int dim = 200;
    int num_dim = 200;
    int top_k = 20;
};

// Boosts repeating facts: a 3-layer perceptron scores each top-k historical
// candidate of the query; every other entity scores exactly zero.
class RepeatModule {
public:
    RepeatModule(RepeatConfig cfg, uint64_t seed) : cfg_(cfg) {
        std::mt19937_64 rng(seed);
        entity_table_ = &store_.create("entity_table", cfg.num_entities, cfg.dim,
                                       nn::xavier_uniform(cfg.num_entities, cfg.dim, rng));
        relation_table_ = &store_.create("relation_table", cfg.num_relations, cfg.dim,
                                         nn::xavier_uniform(cfg.num_relations, cfg.dim, rng));
        time_embed_ = nn::NumericEmbedder::make(store_, "time_embed", cfg.num_dim, rng);
        count_embed_ = nn::NumericEmbedder::make(store_, "count_embed", cfg.num_dim, rng);
        const int in_dim = 3 * cfg.dim + 2 * cfg.num_dim;
        mlp_ = nn::Mlp::make(store_, "mlp", {in_dim, 2 * cfg.dim, cfg.dim, 1}, rng);
    }

    const RepeatConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return store_; }
    const nn::ParamStore& params() const { return store_; }

    // B x |E| scores; nonzero only at the query's top-k historical candidates.
    Var score_batch(Tape& t, const QueryBatch& batch, const CandidateIndex& index) const {
        if (index.frontier() > batch.t_q)
            throw Error(errc::ordering, "repeat scoring at t=" + std::to_string(batch.t_q) +
                                            " with index frontier " +
                                            std::to_string(index.frontier()));
        const int B = batch.size();
        Var entities = t.leaf(*entity_table_);
        Var relations = t.leaf(*relation_table_);
        Var abs_time = time_embed_.embed_one(t, static_cast<double>(batch.t_q));
        std::vector<Var> rows;
        rows.reserve(B);
        for (int i = 0; i < B; ++i) {
            const auto cands =
                index.top_k_candidates(batch.subjects[i], batch.relations[i], cfg_.top_k);
            if (cands.empty()) {
                rows.push_back(t.constant(Mat::Zero(1, cfg_.num_entities)));
                continue;
            }
            const int n = static_cast<int>(cands.size());
            std::vector<int> objs;
            std::vector<double> counts;
            for (const auto& c : cands) {
                objs.push_back(c.object);
                counts.push_back(static_cast<double>(c.count));
            }
            Var hq = t.repeat_row(t.gather_rows(entities, {batch.subjects[i]}), n);
            Var rq = t.repeat_row(t.gather_rows(relations, {batch.relations[i]}), n);
            Var vt = t.repeat_row(abs_time, n);
            Var hi = t.gather_rows(entities, objs);
            Var vc = count_embed_.embed(t, counts);
            Var logits = mlp_.forward(t, t.hcat({hq, rq, vt, hi, vc}));  // n x 1
            rows.push_back(t.scatter_cols_row(logits, objs, cfg_.num_entities));
        }
        return t.vcat(rows);
    }

    // Single-query convenience used by tests and the ensemble.
    Eigen::VectorXd score_repeat(int32_t subject, int32_t relation, int32_t t_q,
                                 const CandidateIndex& index) const {
        QueryBatch b;
        b.t_q = t_q;
        b.subjects = {subject};
        b.relations = {relation};
        b.targets = {0};
        Tape t(false);
        return t.val(score_batch(t, b, index)).row(0).transpose();
    }

    Mat score_eval(const QueryBatch& batch, const CandidateIndex& index) const {
        Tape t(false);
        return t.val(score_batch(t, batch, index));
    }

private:
    RepeatConfig cfg_;
    nn::ParamStore store_;
    ad::Parameter* entity_table_ = nullptr;
    ad::Parameter* relation_table_ = nullptr;
    nn::NumericEmbedder time_embed_;
    nn::NumericEmbedder count_embed_;
    nn::Mlp mlp_;
};

}  // namespace rlgnet
