#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "rlgnet/dataset.hpp"
#include "rlgnet/nn.hpp"
#include "rlgnet/query.hpp"
#include "rlgnet/tape.hpp"

namespace rlgnet {

using ad::Mat;
using ad::Tape;
using ad::Var;

struct LocalConfig {
    int32_t num_entities = 0;
    int32_t num_relations = 0;  // total, after reverse augmentation
    int dim = 200;
    int time_dim = 48;  // V^L output dimension
    int layers = 1;     // omega
    int window = 10;    // m
    int conv_filters = 50;
    int kernel = 3;
    double dropout = 0.2;
};

// Scores queries from the most recent `window` snapshots: per-snapshot
// relational GCN aggregation, GRU evolution with time embeddings, attention
// over per-timestamp candidate aggregates, and a convolutional decoder.
class LocalModule {
public:
    LocalModule(LocalConfig cfg, uint64_t seed) : cfg_(cfg) {
        std::mt19937_64 rng(seed);
        entity_table_ = &store_.create("entity_table", cfg.num_entities, cfg.dim,
                                       nn::xavier_uniform(cfg.num_entities, cfg.dim, rng));
        relation_table_ = &store_.create("relation_table", cfg.num_relations, cfg.dim,
                                         nn::xavier_uniform(cfg.num_relations, cfg.dim, rng));
        for (int l = 0; l < cfg.layers; ++l) {
            gcn_agg_.push_back(&store_.create("gcn.w1." + std::to_string(l), cfg.dim, 4 * cfg.dim,
                                              nn::xavier_uniform(cfg.dim, 4 * cfg.dim, rng)));
            gcn_self_.push_back(&store_.create("gcn.w2." + std::to_string(l), cfg.dim, cfg.dim,
                                               nn::xavier_uniform(cfg.dim, cfg.dim, rng)));
        }
        time_embed_ = nn::NumericEmbedder::make(store_, "time_embed", cfg.time_dim, rng);
        gru_ = nn::GruCell::make(store_, "gru", cfg.dim + cfg.time_dim, cfg.dim, rng);
        attn_ = nn::Mlp::make(store_, "attn", {3 * cfg.dim + cfg.time_dim, cfg.dim, 1}, rng);
        decoder_ = nn::ConvDecoder::make(store_, "decoder", 3, cfg.dim, cfg.conv_filters,
                                         cfg.kernel, cfg.dropout, rng);
    }

    const LocalConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return store_; }
    const nn::ParamStore& params() const { return store_; }

    // H_{t_start} is the static entity table regardless of t_start.
    Var init_states(Tape& t) const { return t.leaf(*entity_table_); }

    // One full GCN pass over a snapshot: layer-0 neighbor mean (entities with
    // no in-edges keep their H row), then `layers` message-passing layers with
    // tanh after each.
    Var gcn_forward(Tape& t, const std::vector<Quadruple>& snapshot, Var h_in) const {
        const int n = cfg_.num_entities;
        std::vector<int> src, rel, dst;
        src.reserve(snapshot.size());
        rel.reserve(snapshot.size());
        dst.reserve(snapshot.size());
        std::vector<int> indeg(n, 0);
        for (const auto& q : snapshot) {
            src.push_back(q.subject);
            rel.push_back(q.relation);
            dst.push_back(q.object);
            ++indeg[q.object];
        }
        std::vector<double> w(dst.size());
        for (size_t e = 0; e < dst.size(); ++e) w[e] = 1.0 / indeg[dst[e]];

        Var x = h_in;
        if (!src.empty()) {
            Mat iso(n, 1);
            for (int i = 0; i < n; ++i) iso(i, 0) = indeg[i] == 0 ? 1.0 : 0.0;
            Var neigh_mean = t.scatter_add_rows(t.gather_rows(h_in, src), dst, w, n);
            x = t.add(neigh_mean, t.scale_rows(h_in, t.constant(iso)));
        }
        for (int l = 0; l < cfg_.layers; ++l) {
            Var self_term = t.matmul_nt(x, t.leaf(*gcn_self_[l]));
            if (src.empty()) {
                x = t.tanh_(self_term);
                continue;
            }
            Var hs = t.gather_rows(x, src);
            Var r = t.gather_rows(t.leaf(*relation_table_), rel);
            Var phi = t.hcat({hs, r, t.add(hs, r), t.hadamard(hs, r)});
            Var msg = t.scatter_add_rows(t.matmul_nt(phi, t.leaf(*gcn_agg_[l])), dst, w, n);
            x = t.tanh_(t.add(msg, self_term));
        }
        return x;
    }

    // States H over the window ending at history_end (exclusive). Returns
    // w_len + 1 tensors: the initial table state followed by one state per
    // evolved snapshot; the last one is the decoder's entity matrix. Time
    // offsets are measured from t_q, which may exceed history_end when the
    // history is frozen (multi-step protocol).
    std::vector<Var> evolve(Tape& t, const SnapshotSequence& seq, int32_t t_q,
                            int32_t history_end) const {
        const int32_t end = std::min(history_end, seq.num_snapshots());
        const int32_t start = std::max(0, end - cfg_.window);
        std::vector<Var> states;
        states.push_back(init_states(t));
        for (int32_t tau = start; tau < end; ++tau) {
            Var h = states.back();
            Var evolved = gcn_forward(t, seq.snapshots[tau], h);
            Var time_row = time_embed_.embed_one(t, static_cast<double>(t_q - tau));
            Var x = t.hcat({h, t.repeat_row(time_row, cfg_.num_entities)});
            states.push_back(gru_.step(t, x, evolved));
        }
        return states;
    }

    // C'_q per query: softmax-attention over per-timestamp candidate means
    // (Eqs. 8-10 semantics; empty window or empty candidate sets give zeros).
    Var candidate_attention(Tape& t, const std::vector<Var>& states,
                            const SnapshotSequence& seq, const QueryBatch& batch,
                            int32_t history_end) const {
        const int B = batch.size();
        const int32_t end = std::min(history_end, seq.num_snapshots());
        const int32_t start = std::max(0, end - cfg_.window);
        const int w_len = end - start;
        if (w_len == 0) return t.constant(Mat::Zero(B, cfg_.dim));

        Var rq = t.gather_rows(t.leaf(*relation_table_), batch_relations(batch));
        std::vector<Var> cand_means;
        std::vector<Var> logit_cols;
        for (int32_t tau = start; tau < end; ++tau) {
            Var h_tau = states[tau - start];
            auto cand_map = snapshot_candidates(seq.snapshots[tau]);
            std::vector<int> rows, qidx;
            std::vector<double> wts;
            for (int i = 0; i < B; ++i) {
                auto it = cand_map.find(query_key(batch.subjects[i], batch.relations[i]));
                if (it == cand_map.end()) continue;
                for (int32_t o : it->second) {
                    rows.push_back(o);
                    qidx.push_back(i);
                    wts.push_back(1.0 / static_cast<double>(it->second.size()));
                }
            }
            Var c_mean = rows.empty()
                             ? t.constant(Mat::Zero(B, cfg_.dim))
                             : t.scatter_add_rows(t.gather_rows(h_tau, rows), qidx, wts, B);
            Var hq = t.gather_rows(h_tau, batch_subjects(batch));
            Var time_row = time_embed_.embed_one(t, static_cast<double>(batch.t_q - tau));
            Var feat = t.hcat({hq, rq, t.repeat_row(time_row, B), c_mean});
            logit_cols.push_back(attn_.forward(t, feat));  // B x 1
            cand_means.push_back(c_mean);
        }
        Var weights = t.softmax_rows(t.hcat(logit_cols));  // B x w_len
        Var out = t.scale_rows(cand_means[0], t.col_of(weights, 0));
        for (int j = 1; j < w_len; ++j)
            out = t.add(out, t.scale_rows(cand_means[j], t.col_of(weights, j)));
        return out;
    }

    // Full scoring graph for one snapshot batch: B x |E| raw scores.
    Var score_batch(Tape& t, const SnapshotSequence& seq, const QueryBatch& batch,
                    int32_t history_end, std::mt19937_64* dropout_rng = nullptr) const {
        const auto states = evolve(t, seq, batch.t_q, history_end);
        Var c_attn = candidate_attention(t, states, seq, batch, history_end);
        return score_with_states(t, states.back(), c_attn, batch, dropout_rng);
    }

    // Decoder + inner product against H_{t_q}; split out so tests can feed a
    // hand-built C'_q.
    Var score_with_states(Tape& t, Var h_final, Var c_attn, const QueryBatch& batch,
                          std::mt19937_64* dropout_rng = nullptr) const {
        const int B = batch.size();
        Var hq = t.gather_rows(h_final, batch_subjects(batch));
        Var rq = t.gather_rows(t.leaf(*relation_table_), batch_relations(batch));
        std::vector<Var> out_rows;
        out_rows.reserve(B);
        for (int i = 0; i < B; ++i) {
            std::vector<Var> channels{t.gather_rows(hq, {i}), t.gather_rows(rq, {i}),
                                      t.gather_rows(c_attn, {i})};
            out_rows.push_back(decoder_.decode(t, channels, dropout_rng));
        }
        return t.matmul_nt(t.vcat(out_rows), h_final);
    }

    Mat score_eval(const SnapshotSequence& seq, const QueryBatch& batch,
                   int32_t history_end) const {
        Tape t(false);
        return t.val(score_batch(t, seq, batch, history_end));
    }

private:
    static std::vector<int> batch_subjects(const QueryBatch& b) {
        return std::vector<int>(b.subjects.begin(), b.subjects.end());
    }
    static std::vector<int> batch_relations(const QueryBatch& b) {
        return std::vector<int>(b.relations.begin(), b.relations.end());
    }

    LocalConfig cfg_;
    nn::ParamStore store_;
    ad::Parameter* entity_table_ = nullptr;
    ad::Parameter* relation_table_ = nullptr;
    std::vector<ad::Parameter*> gcn_agg_;
    std::vector<ad::Parameter*> gcn_self_;
    nn::NumericEmbedder time_embed_;
    nn::GruCell gru_;
    nn::Mlp attn_;
    nn::ConvDecoder decoder_;
};

}  // namespace rlgnet
