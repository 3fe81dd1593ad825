#pragma once

#include <random>
#include <utility>
#include <vector>

#include "rlgnet/history.hpp"
#include "rlgnet/nn.hpp"
#include "rlgnet/query.hpp"
#include "rlgnet/tape.hpp"

namespace rlgnet {

using ad::Mat;
using ad::Tape;
using ad::Var;

struct GlobalConfig {
    int32_t num_entities = 0;
    int32_t num_relations = 0;  // total, after reverse augmentation
    int dim = 200;
    int num_dim = 200;  // numeric embedder output dimension
    int top_k_all = 200;
    int conv_filters = 50;
    int kernel = 3;
    double dropout = 0.2;
};

// Scores queries from whole-history candidate statistics: two attention
// branches over the pooled top_k_all candidates (recency gaps and occurrence
// counts), then a convolutional decoder over static global embeddings.
class GlobalModule {
public:
    GlobalModule(GlobalConfig cfg, uint64_t seed) : cfg_(cfg) {
        std::mt19937_64 rng(seed);
        entity_table_ = &store_.create("entity_table", cfg.num_entities, cfg.dim,
                                       nn::xavier_uniform(cfg.num_entities, cfg.dim, rng));
        relation_table_ = &store_.create("relation_table", cfg.num_relations, cfg.dim,
                                         nn::xavier_uniform(cfg.num_relations, cfg.dim, rng));
        w_query_gap_ = &store_.create("attn.w1", cfg.dim, 2 * cfg.dim,
                                      nn::xavier_uniform(cfg.dim, 2 * cfg.dim, rng));
        w_cand_gap_ = &store_.create("attn.w2", cfg.dim, cfg.num_dim + cfg.dim,
                                     nn::xavier_uniform(cfg.dim, cfg.num_dim + cfg.dim, rng));
        w_query_cnt_ = &store_.create("attn.w3", cfg.dim, 2 * cfg.dim,
                                      nn::xavier_uniform(cfg.dim, 2 * cfg.dim, rng));
        w_cand_cnt_ = &store_.create("attn.w4", cfg.dim, cfg.num_dim + cfg.dim,
                                     nn::xavier_uniform(cfg.dim, cfg.num_dim + cfg.dim, rng));
        recency_embed_ = nn::NumericEmbedder::make(store_, "recency_embed", cfg.num_dim, rng);
        frequency_embed_ = nn::NumericEmbedder::make(store_, "frequency_embed", cfg.num_dim, rng);
        abs_time_embed_ = nn::NumericEmbedder::make(store_, "abs_time_embed", cfg.num_dim, rng);
        decoder_ = nn::ConvDecoder::make(store_, "decoder", 5, cfg.dim, cfg.conv_filters,
                                         cfg.kernel, cfg.dropout, rng);
    }

    const GlobalConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return store_; }
    const nn::ParamStore& params() const { return store_; }

    // Attention-weighted candidate embeddings for one query: the recency
    // branch and the frequency branch. Empty candidate lists give zeros.
    std::pair<Var, Var> global_attention(Tape& t, int32_t subject, int32_t relation,
                                         int32_t t_q,
                                         const std::vector<FrequencyRecencyRecord>& cands) const {
        if (cands.empty()) {
            Var z = t.constant(Mat::Zero(1, cfg_.dim));
            return {z, z};
        }
        Var entities = t.leaf(*entity_table_);
        Var hq = t.gather_rows(entities, {subject});
        Var rq = t.gather_rows(t.leaf(*relation_table_), {relation});
        Var query_cat = t.hcat({hq, rq});  // 1 x 2d
        Var u_gap = t.matmul_nt(query_cat, t.leaf(*w_query_gap_));
        Var u_cnt = t.matmul_nt(query_cat, t.leaf(*w_query_cnt_));

        std::vector<int> objs;
        std::vector<double> gaps, counts;
        for (const auto& c : cands) {
            objs.push_back(c.object);
            gaps.push_back(static_cast<double>(t_q - c.last_seen));
            counts.push_back(static_cast<double>(c.count));
        }
        Var hi = t.gather_rows(entities, objs);  // n x d
        Var key_gap = t.matmul_nt(t.hcat({recency_embed_.embed(t, gaps), hi}),
                                  t.leaf(*w_cand_gap_));
        Var key_cnt = t.matmul_nt(t.hcat({frequency_embed_.embed(t, counts), hi}),
                                  t.leaf(*w_cand_cnt_));
        Var a_gap = t.softmax_rows(t.matmul_nt(u_gap, key_gap));  // 1 x n
        Var a_cnt = t.softmax_rows(t.matmul_nt(u_cnt, key_cnt));
        return {t.matmul(a_gap, hi), t.matmul(a_cnt, hi)};
    }

    // B x |E| raw scores. The index frontier must not exceed t_q so that every
    // candidate statistic predates the query.
    Var score_batch(Tape& t, const QueryBatch& batch, const CandidateIndex& index,
                    std::mt19937_64* dropout_rng = nullptr) const {
        if (index.frontier() > batch.t_q)
            throw Error(errc::ordering, "global scoring at t=" + std::to_string(batch.t_q) +
                                            " with index frontier " +
                                            std::to_string(index.frontier()));
        const int B = batch.size();
        Var entities = t.leaf(*entity_table_);
        Var relations = t.leaf(*relation_table_);
        Var abs_time = abs_time_embed_.embed_one(t, static_cast<double>(batch.t_q));
        std::vector<Var> out_rows;
        out_rows.reserve(B);
        for (int i = 0; i < B; ++i) {
            const auto cands = index.top_k_candidates(batch.subjects[i], batch.relations[i],
                                                      cfg_.top_k_all);
            auto [c_gap, c_cnt] =
                global_attention(t, batch.subjects[i], batch.relations[i], batch.t_q, cands);
            std::vector<Var> channels{t.gather_rows(entities, {batch.subjects[i]}),
                                      t.gather_rows(relations, {batch.relations[i]}),
                                      abs_time, c_gap, c_cnt};
            out_rows.push_back(decoder_.decode(t, channels, dropout_rng));
        }
        return t.matmul_nt(t.vcat(out_rows), entities);
    }

    Mat score_eval(const QueryBatch& batch, const CandidateIndex& index) const {
        Tape t(false);
        return t.val(score_batch(t, batch, index));
    }

private:
    GlobalConfig cfg_;
    nn::ParamStore store_;
    ad::Parameter* entity_table_ = nullptr;
    ad::Parameter* relation_table_ = nullptr;
    ad::Parameter* w_query_gap_ = nullptr;
    ad::Parameter* w_cand_gap_ = nullptr;
    ad::Parameter* w_query_cnt_ = nullptr;
    ad::Parameter* w_cand_cnt_ = nullptr;
    nn::NumericEmbedder recency_embed_;
    nn::NumericEmbedder frequency_embed_;
    nn::NumericEmbedder abs_time_embed_;
    nn::ConvDecoder decoder_;
};

}  // namespace rlgnet
