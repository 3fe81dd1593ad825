#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "rlgnet/tape.hpp"
#include "rlgnet/types.hpp"

namespace rlgnet::nn {

using ad::Mat;
using ad::Parameter;
using ad::Tape;
using ad::Var;

// Owns a module's parameters; iteration order is creation order and is the
// checkpoint order.
class ParamStore {
public:
    Parameter& create(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                      Mat init) {
        if (by_name_.count(name)) throw Error(errc::config, "duplicate parameter " + name);
        if (init.rows() != rows || init.cols() != cols)
            throw Error(errc::config, "bad init shape for " + name);
        params_.push_back(std::make_unique<Parameter>(name, std::move(init)));
        by_name_[name] = params_.back().get();
        return *params_.back();
    }

    Parameter* find(const std::string& name) const {
        auto it = by_name_.find(name);
        return it == by_name_.end() ? nullptr : it->second;
    }

    const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }

    void zero_grad() {
        for (auto& p : params_) p->grad.setZero();
    }

    size_t num_scalars() const {
        size_t n = 0;
        for (auto& p : params_) n += static_cast<size_t>(p->value.size());
        return n;
    }

private:
    std::vector<std::unique_ptr<Parameter>> params_;
    std::unordered_map<std::string, Parameter*> by_name_;
};

// Xavier-style uniform init for weight matrices and embedding tables.
inline Mat xavier_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

// Small uniform init at scale 1/sqrt(n), used by the numeric embedders.
inline Mat small_uniform(Eigen::Index rows, Eigen::Index cols, double scale,
                         std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

// Maps scalars to dense embeddings: cos(W1*x + b1) concatenated with
// tanh(W2*x + b2). Output dimension is 2 * half_dim.
struct NumericEmbedder {
    Parameter* w_cos = nullptr;
    Parameter* b_cos = nullptr;
    Parameter* w_tanh = nullptr;
    Parameter* b_tanh = nullptr;
    int half_dim = 0;

    static NumericEmbedder make(ParamStore& store, const std::string& prefix, int out_dim,
                                std::mt19937_64& rng) {
        if (out_dim % 2 != 0) throw Error(errc::config, prefix + ": output dim must be even");
        NumericEmbedder e;
        e.half_dim = out_dim / 2;
        const double scale = 1.0 / std::sqrt(static_cast<double>(e.half_dim));
        e.w_cos = &store.create(prefix + ".w_cos", 1, e.half_dim,
                                small_uniform(1, e.half_dim, scale, rng));
        e.b_cos = &store.create(prefix + ".b_cos", 1, e.half_dim,
                                small_uniform(1, e.half_dim, scale, rng));
        e.w_tanh = &store.create(prefix + ".w_tanh", 1, e.half_dim,
                                 small_uniform(1, e.half_dim, scale, rng));
        e.b_tanh = &store.create(prefix + ".b_tanh", 1, e.half_dim,
                                 small_uniform(1, e.half_dim, scale, rng));
        return e;
    }

    int out_dim() const { return 2 * half_dim; }

    // One row per input scalar: n x (2 * half_dim).
    Var embed(Tape& t, const std::vector<double>& xs) const {
        for (double x : xs)
            if (!std::isfinite(x)) throw Error(errc::domain, "numeric embedding of non-finite input");
        Mat col(static_cast<Eigen::Index>(xs.size()), 1);
        for (size_t i = 0; i < xs.size(); ++i) col(static_cast<Eigen::Index>(i), 0) = xs[i];
        Var x = t.constant(std::move(col));
        Var a = t.add_row(t.matmul(x, t.leaf(*w_cos)), t.leaf(*b_cos));
        Var b = t.add_row(t.matmul(x, t.leaf(*w_tanh)), t.leaf(*b_tanh));
        return t.hcat({t.cos_(a), t.tanh_(b)});
    }

    Var embed_one(Tape& t, double x) const { return embed(t, {x}); }
};

// Fully connected stack; tanh on hidden layers, linear output.
struct Mlp {
    std::vector<Parameter*> weights;  // out x in
    std::vector<Parameter*> biases;   // 1 x out

    static Mlp make(ParamStore& store, const std::string& prefix,
                    const std::vector<int>& dims, std::mt19937_64& rng) {
        Mlp m;
        for (size_t l = 0; l + 1 < dims.size(); ++l) {
            m.weights.push_back(&store.create(prefix + ".w" + std::to_string(l), dims[l + 1],
                                              dims[l], xavier_uniform(dims[l + 1], dims[l], rng)));
            m.biases.push_back(&store.create(prefix + ".b" + std::to_string(l), 1, dims[l + 1],
                                             Mat::Zero(1, dims[l + 1])));
        }
        return m;
    }

    Var forward(Tape& t, Var x) const {
        for (size_t l = 0; l < weights.size(); ++l) {
            x = t.add_row(t.matmul_nt(x, t.leaf(*weights[l])), t.leaf(*biases[l]));
            if (l + 1 < weights.size()) x = t.tanh_(x);
        }
        return x;
    }
};

// Gated recurrent cell, PyTorch gate convention. Weights stored out x in and
// applied as x * W^T.
struct GruCell {
    Parameter *wxr, *whr, *bxr, *bhr;
    Parameter *wxz, *whz, *bxz, *bhz;
    Parameter *wxn, *whn, *bxn, *bhn;

    static GruCell make(ParamStore& store, const std::string& prefix, int in_dim, int hid_dim,
                        std::mt19937_64& rng) {
        GruCell g{};
        auto w = [&](const char* n, int out, int in) -> Parameter* {
            return &store.create(prefix + "." + n, out, in, xavier_uniform(out, in, rng));
        };
        auto b = [&](const char* n, int out) -> Parameter* {
            return &store.create(prefix + "." + n, 1, out, Mat::Zero(1, out));
        };
        g.wxr = w("wxr", hid_dim, in_dim); g.whr = w("whr", hid_dim, hid_dim);
        g.bxr = b("bxr", hid_dim);         g.bhr = b("bhr", hid_dim);
        g.wxz = w("wxz", hid_dim, in_dim); g.whz = w("whz", hid_dim, hid_dim);
        g.bxz = b("bxz", hid_dim);         g.bhz = b("bhz", hid_dim);
        g.wxn = w("wxn", hid_dim, in_dim); g.whn = w("whn", hid_dim, hid_dim);
        g.bxn = b("bxn", hid_dim);         g.bhn = b("bhn", hid_dim);
        return g;
    }

    // x: n x in, h: n x hid  ->  n x hid
    Var step(Tape& t, Var x, Var h) const {
        auto affine = [&](Parameter* wx, Parameter* bx, Parameter* wh, Parameter* bh) {
            return t.add(t.add_row(t.matmul_nt(x, t.leaf(*wx)), t.leaf(*bx)),
                         t.add_row(t.matmul_nt(h, t.leaf(*wh)), t.leaf(*bh)));
        };
        Var r = t.sigmoid_(affine(wxr, bxr, whr, bhr));
        Var z = t.sigmoid_(affine(wxz, bxz, whz, bhz));
        Var hn = t.add_row(t.matmul_nt(h, t.leaf(*whn)), t.leaf(*bhn));
        Var n = t.tanh_(t.add(t.add_row(t.matmul_nt(x, t.leaf(*wxn)), t.leaf(*bxn)),
                              t.hadamard(r, hn)));
        return t.add(t.hadamard(t.one_minus(z), n), t.hadamard(z, h));
    }
};

// ConvTransE-style decoder: stacks the given embedding rows as input channels,
// convolves along the embedding axis, flattens, projects back to dim.
struct ConvDecoder {
    Parameter* kernels = nullptr;  // filters x (channels * kwidth)
    Parameter* kbias = nullptr;    // 1 x filters
    Parameter* fc_w = nullptr;     // dim x (filters * dim)
    Parameter* fc_b = nullptr;     // 1 x dim
    int channels = 0, filters = 0, kwidth = 0, dim = 0;
    double dropout_rate = 0.0;

    static ConvDecoder make(ParamStore& store, const std::string& prefix, int channels,
                            int dim, int filters, int kwidth, double dropout,
                            std::mt19937_64& rng) {
        ConvDecoder d;
        d.channels = channels;
        d.filters = filters;
        d.kwidth = kwidth;
        d.dim = dim;
        d.dropout_rate = dropout;
        d.kernels = &store.create(prefix + ".kernels", filters, channels * kwidth,
                                  xavier_uniform(filters, channels * kwidth, rng));
        d.kbias = &store.create(prefix + ".kbias", 1, filters, Mat::Zero(1, filters));
        d.fc_w = &store.create(prefix + ".fc_w", dim, filters * dim,
                               xavier_uniform(dim, filters * dim, rng));
        d.fc_b = &store.create(prefix + ".fc_b", 1, dim, Mat::Zero(1, dim));
        return d;
    }

    // channel_rows: `channels` rows of length dim. dropout_rng == nullptr
    // disables dropout (evaluation / gradient checks).
    Var decode(Tape& t, const std::vector<Var>& channel_rows,
               std::mt19937_64* dropout_rng) const {
        if (static_cast<int>(channel_rows.size()) != channels)
            throw Error(errc::config, "decoder: wrong channel count");
        Var x = t.vcat(channel_rows);
        if (dropout_rng) x = t.dropout(x, dropout_rate, *dropout_rng);
        Var fm = t.tanh_(t.conv1d_same(x, t.leaf(*kernels), t.leaf(*kbias), kwidth));
        if (dropout_rng) fm = t.dropout(fm, dropout_rate, *dropout_rng);
        Var out = t.add_row(t.matmul_nt(t.flatten_row(fm), t.leaf(*fc_w)), t.leaf(*fc_b));
        if (dropout_rng) out = t.dropout(out, dropout_rate, *dropout_rng);
        return out;  // 1 x dim
    }
};

// Adaptive moment estimation with default moment coefficients.
class AdamOptimizer {
public:
    explicit AdamOptimizer(double lr) : lr_(lr) {}

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

    // Global gradient-norm clipping; returns the pre-clip norm.
    static double clip_global_norm(ParamStore& store, double max_norm) {
        double sq = 0.0;
        for (const auto& p : store.all()) sq += p->grad.squaredNorm();
        const double norm = std::sqrt(sq);
        if (max_norm > 0.0 && norm > max_norm) {
            const double s = max_norm / norm;
            for (const auto& p : store.all()) p->grad *= s;
        }
        return norm;
    }

    // One update; consumes and zeroes gradients.
    void step(ParamStore& store) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (const auto& p : store.all()) {
            p->adam_m = beta1_ * p->adam_m + (1.0 - beta1_) * p->grad;
            p->adam_v = beta2_ * p->adam_v.array().matrix() +
                        (1.0 - beta2_) * p->grad.array().square().matrix();
            const auto mhat = p->adam_m.array() / bc1;
            const auto vhat = p->adam_v.array() / bc2;
            p->value.array() -= lr_ * mhat / (vhat.sqrt() + eps_);
            p->grad.setZero();
        }
    }

private:
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    int64_t t_ = 0;
};

}  // namespace rlgnet::nn
