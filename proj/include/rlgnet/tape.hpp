#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rlgnet::ad {

using Mat = Eigen::MatrixXd;

// Trainable tensor. Lives outside any tape; gradients accumulate into `grad`
// across one forward/backward pass, the optimizer consumes and clears them.
struct Parameter {
    std::string name;
    Mat value;
    Mat grad;
    Mat adam_m, adam_v;

    Parameter(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
        grad = Mat::Zero(value.rows(), value.cols());
        adam_m = Mat::Zero(value.rows(), value.cols());
        adam_v = Mat::Zero(value.rows(), value.cols());
    }
    Parameter(const Parameter&) = delete;
    Parameter& operator=(const Parameter&) = delete;
};

// Handle to a node on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense matrices. Build one tape per forward pass;
// backward() walks the recorded ops in reverse. A tape constructed with
// record=false computes values only (evaluation path, no closures).
class Tape {
public:
    explicit Tape(bool record = true) : record_(record) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return record_; }
    size_t size() const { return nodes_.size(); }

    const Mat& val(Var v) const {
        const Node& n = node(v);
        return n.ref ? *n.ref : n.value;
    }

    // Gradient of the last backward() seed w.r.t. this node (tests only).
    const Mat& grad_of(Var v) const {
        const Node& n = node(v);
        if (n.grad.size() == 0) {
            static const Mat empty;
            return empty;
        }
        return n.grad;
    }

    Var leaf(Parameter& p) {
        Node n;
        n.ref = &p.value;
        n.param = record_ ? &p : nullptr;
        n.needs_grad = record_;
        if (record_)
            n.pull = [](Tape&, Node& self) { self.param->grad += self.grad; };
        return push(std::move(n));
    }

    Var constant(Mat v) {
        Node n;
        n.value = std::move(v);
        return push(std::move(n));
    }

    Var matmul(Var a, Var b) {
        check_cols_rows(a, b, "matmul");
        return binary(
            a, b, val(a) * val(b),
            [](Tape& t, Node& self, int ia, int ib) {
                if (t.wants(ia)) t.acc(ia) += self.grad * t.val(Var{ib}).transpose();
                if (t.wants(ib)) t.acc(ib) += t.val(Var{ia}).transpose() * self.grad;
            });
    }

    // a * b^T
    Var matmul_nt(Var a, Var b) {
        if (val(a).cols() != val(b).cols())
            throw std::invalid_argument("matmul_nt: inner dimensions differ");
        return binary(
            a, b, val(a) * val(b).transpose(),
            [](Tape& t, Node& self, int ia, int ib) {
                if (t.wants(ia)) t.acc(ia) += self.grad * t.val(Var{ib});
                if (t.wants(ib)) t.acc(ib) += self.grad.transpose() * t.val(Var{ia});
            });
    }

    Var add(Var a, Var b) {
        check_same_shape(a, b, "add");
        return binary(a, b, val(a) + val(b),
                      [](Tape& t, Node& self, int ia, int ib) {
                          if (t.wants(ia)) t.acc(ia) += self.grad;
                          if (t.wants(ib)) t.acc(ib) += self.grad;
                      });
    }

    Var sub(Var a, Var b) {
        check_same_shape(a, b, "sub");
        return binary(a, b, val(a) - val(b),
                      [](Tape& t, Node& self, int ia, int ib) {
                          if (t.wants(ia)) t.acc(ia) += self.grad;
                          if (t.wants(ib)) t.acc(ib) -= self.grad;
                      });
    }

    Var hadamard(Var a, Var b) {
        check_same_shape(a, b, "hadamard");
        return binary(a, b, val(a).cwiseProduct(val(b)),
                      [](Tape& t, Node& self, int ia, int ib) {
                          if (t.wants(ia)) t.acc(ia) += self.grad.cwiseProduct(t.val(Var{ib}));
                          if (t.wants(ib)) t.acc(ib) += self.grad.cwiseProduct(t.val(Var{ia}));
                      });
    }

    Var scale(Var a, double s) {
        return unary(a, val(a) * s, [s](Tape& t, Node& self, int ia) {
            t.acc(ia) += self.grad * s;
        });
    }

    Var one_minus(Var a) {
        return unary(a, (1.0 - val(a).array()).matrix(),
                     [](Tape& t, Node& self, int ia) { t.acc(ia) -= self.grad; });
    }

    // a (n x d) + row (1 x d) broadcast over rows
    Var add_row(Var a, Var row) {
        if (val(row).rows() != 1 || val(a).cols() != val(row).cols())
            throw std::invalid_argument("add_row: row must be 1 x cols(a)");
        Mat v = val(a);
        v.rowwise() += val(row).row(0);
        return binary(a, row, std::move(v),
                      [](Tape& t, Node& self, int ia, int ib) {
                          if (t.wants(ia)) t.acc(ia) += self.grad;
                          if (t.wants(ib)) t.acc(ib) += self.grad.colwise().sum();
                      });
    }

    Var repeat_row(Var row, int n) {
        if (val(row).rows() != 1) throw std::invalid_argument("repeat_row: need 1-row input");
        Mat v(n, val(row).cols());
        v.rowwise() = val(row).row(0);
        return unary(row, std::move(v), [](Tape& t, Node& self, int ia) {
            t.acc(ia) += self.grad.colwise().sum();
        });
    }

    Var hcat(const std::vector<Var>& xs) {
        if (xs.empty()) throw std::invalid_argument("hcat: empty");
        const auto rows = val(xs[0]).rows();
        Eigen::Index cols = 0;
        for (Var x : xs) {
            if (val(x).rows() != rows) throw std::invalid_argument("hcat: row mismatch");
            cols += val(x).cols();
        }
        Mat v(rows, cols);
        Eigen::Index off = 0;
        std::vector<std::pair<int, Eigen::Index>> parts;
        for (Var x : xs) {
            v.middleCols(off, val(x).cols()) = val(x);
            parts.emplace_back(x.id, off);
            off += val(x).cols();
        }
        return nary(xs, std::move(v), [parts](Tape& t, Node& self) {
            for (auto [id, o] : parts)
                if (t.wants(id)) {
                    Mat& g = t.acc(id);
                    g += self.grad.middleCols(o, g.cols());
                }
        });
    }

    Var vcat(const std::vector<Var>& xs) {
        if (xs.empty()) throw std::invalid_argument("vcat: empty");
        const auto cols = val(xs[0]).cols();
        Eigen::Index rows = 0;
        for (Var x : xs) {
            if (val(x).cols() != cols) throw std::invalid_argument("vcat: col mismatch");
            rows += val(x).rows();
        }
        Mat v(rows, cols);
        Eigen::Index off = 0;
        std::vector<std::pair<int, Eigen::Index>> parts;
        for (Var x : xs) {
            v.middleRows(off, val(x).rows()) = val(x);
            parts.emplace_back(x.id, off);
            off += val(x).rows();
        }
        return nary(xs, std::move(v), [parts](Tape& t, Node& self) {
            for (auto [id, o] : parts)
                if (t.wants(id)) {
                    Mat& g = t.acc(id);
                    g += self.grad.middleRows(o, g.rows());
                }
        });
    }

    Var tanh_(Var a) {
        return unary(a, val(a).array().tanh().matrix(),
                     [](Tape& t, Node& self, int ia) {
                         const Mat& y = self.value;
                         t.acc(ia).array() += self.grad.array() * (1.0 - y.array().square());
                     });
    }

    Var cos_(Var a) {
        return unary(a, val(a).array().cos().matrix(),
                     [](Tape& t, Node& self, int ia) {
                         t.acc(ia).array() -= self.grad.array() * t.val(Var{ia}).array().sin();
                     });
    }

    Var sigmoid_(Var a) {
        Mat v = (1.0 / (1.0 + (-val(a).array()).exp())).matrix();
        return unary(a, std::move(v), [](Tape& t, Node& self, int ia) {
            const auto y = self.value.array();
            t.acc(ia).array() += self.grad.array() * y * (1.0 - y);
        });
    }

    Var gather_rows(Var a, std::vector<int> rows) {
        Mat v(static_cast<Eigen::Index>(rows.size()), val(a).cols());
        for (size_t i = 0; i < rows.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = val(a).row(rows[i]);
        return unary(a, std::move(v), [rows = std::move(rows)](Tape& t, Node& self, int ia) {
            Mat& g = t.acc(ia);
            for (size_t i = 0; i < rows.size(); ++i)
                g.row(rows[i]) += self.grad.row(static_cast<Eigen::Index>(i));
        });
    }

    // out(dst[e], :) += w[e] * src(e, :); out has out_rows rows.
    Var scatter_add_rows(Var src, std::vector<int> dst, std::vector<double> w, int out_rows) {
        if (static_cast<Eigen::Index>(dst.size()) != val(src).rows() || dst.size() != w.size())
            throw std::invalid_argument("scatter_add_rows: size mismatch");
        Mat v = Mat::Zero(out_rows, val(src).cols());
        for (size_t e = 0; e < dst.size(); ++e)
            v.row(dst[e]) += w[e] * val(src).row(static_cast<Eigen::Index>(e));
        return unary(src, std::move(v),
                     [dst = std::move(dst), w = std::move(w)](Tape& t, Node& self, int ia) {
                         Mat& g = t.acc(ia);
                         for (size_t e = 0; e < dst.size(); ++e)
                             g.row(static_cast<Eigen::Index>(e)) += w[e] * self.grad.row(dst[e]);
                     });
    }

    // vals (n x 1) scattered into a 1 x width row at the given columns.
    Var scatter_cols_row(Var vals, std::vector<int> cols, int width) {
        if (val(vals).cols() != 1 || static_cast<size_t>(val(vals).rows()) != cols.size())
            throw std::invalid_argument("scatter_cols_row: vals must be n x 1 matching cols");
        Mat v = Mat::Zero(1, width);
        for (size_t i = 0; i < cols.size(); ++i) v(0, cols[i]) += val(vals)(static_cast<Eigen::Index>(i), 0);
        return unary(vals, std::move(v), [cols = std::move(cols)](Tape& t, Node& self, int ia) {
            Mat& g = t.acc(ia);
            for (size_t i = 0; i < cols.size(); ++i)
                g(static_cast<Eigen::Index>(i), 0) += self.grad(0, cols[i]);
        });
    }

    // Single column j of a, as n x 1.
    Var col_of(Var a, int j) {
        if (j < 0 || j >= val(a).cols()) throw std::invalid_argument("col_of: bad column");
        return unary(a, val(a).col(j), [j](Tape& t, Node& self, int ia) {
            t.acc(ia).col(j) += self.grad.col(0);
        });
    }

    Var mean_rows(Var a) {
        const double n = static_cast<double>(val(a).rows());
        Mat v = val(a).colwise().mean();
        return unary(a, std::move(v), [n](Tape& t, Node& self, int ia) {
            t.acc(ia).rowwise() += (self.grad.row(0) / n);
        });
    }

    Var softmax_rows(Var a) {
        Mat v = val(a);
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            const double mx = v.row(i).maxCoeff();
            v.row(i) = (v.row(i).array() - mx).exp();
            v.row(i) /= v.row(i).sum();
        }
        return unary(a, std::move(v), [](Tape& t, Node& self, int ia) {
            const Mat& p = self.value;
            Mat& g = t.acc(ia);
            for (Eigen::Index i = 0; i < p.rows(); ++i) {
                const double dot = self.grad.row(i).cwiseProduct(p.row(i)).sum();
                g.row(i).array() += p.row(i).array() * (self.grad.row(i).array() - dot);
            }
        });
    }

    // a (n x d) with row i scaled by s(i, 0)
    Var scale_rows(Var a, Var s) {
        if (val(s).cols() != 1 || val(s).rows() != val(a).rows())
            throw std::invalid_argument("scale_rows: s must be rows(a) x 1");
        Mat v = val(a).array().colwise() * val(s).col(0).array();
        return binary(a, s, std::move(v),
                      [](Tape& t, Node& self, int ia, int ib) {
                          if (t.wants(ia))
                              t.acc(ia).array() +=
                                  self.grad.array().colwise() * t.val(Var{ib}).col(0).array();
                          if (t.wants(ib))
                              t.acc(ib).col(0) +=
                                  self.grad.cwiseProduct(t.val(Var{ia})).rowwise().sum();
                      });
    }

    // 1-D convolution along the embedding axis with same padding.
    // x: C x d (stacked channels), k: F x (C*kw), bias: 1 x F  ->  F x d
    Var conv1d_same(Var x, Var k, Var bias, int kw) {
        const Eigen::Index C = val(x).rows(), d = val(x).cols();
        const Eigen::Index F = val(k).rows();
        if (val(k).cols() != C * kw) throw std::invalid_argument("conv1d_same: kernel shape");
        if (val(bias).rows() != 1 || val(bias).cols() != F)
            throw std::invalid_argument("conv1d_same: bias shape");
        const int pad = kw / 2;
        Mat xcol = Mat::Zero(C * kw, d);
        for (Eigen::Index c = 0; c < C; ++c)
            for (int j = 0; j < kw; ++j)
                for (Eigen::Index col = 0; col < d; ++col) {
                    const Eigen::Index src = col + j - pad;
                    if (src >= 0 && src < d) xcol(c * kw + j, col) = val(x)(c, src);
                }
        Mat v = val(k) * xcol;
        v.colwise() += val(bias).row(0).transpose();
        std::vector<Var> ins{x, k, bias};
        auto xcol_shared = std::make_shared<Mat>(std::move(xcol));
        return nary(ins, std::move(v),
                    [xcol_shared, kw, pad, C, d, ix = x.id, ik = k.id, ib = bias.id](Tape& t, Node& self) {
                        if (t.wants(ik)) t.acc(ik) += self.grad * xcol_shared->transpose();
                        if (t.wants(ib)) t.acc(ib) += self.grad.rowwise().sum().transpose();
                        if (t.wants(ix)) {
                            Mat dxcol = t.val(Var{ik}).transpose() * self.grad;
                            Mat& gx = t.acc(ix);
                            for (Eigen::Index c = 0; c < C; ++c)
                                for (int j = 0; j < kw; ++j)
                                    for (Eigen::Index col = 0; col < d; ++col) {
                                        const Eigen::Index src = col + j - pad;
                                        if (src >= 0 && src < d) gx(c, src) += dxcol(c * kw + j, col);
                                    }
                        }
                    });
    }

    // r x c  ->  1 x (r*c), row-major order
    Var flatten_row(Var a) {
        const Eigen::Index r = val(a).rows(), c = val(a).cols();
        Mat v(1, r * c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) v(0, i * c + j) = val(a)(i, j);
        return unary(a, std::move(v), [r, c](Tape& t, Node& self, int ia) {
            Mat& g = t.acc(ia);
            for (Eigen::Index i = 0; i < r; ++i)
                for (Eigen::Index j = 0; j < c; ++j) g(i, j) += self.grad(0, i * c + j);
        });
    }

    // Inverted dropout; identity when rate == 0. Call only on training tapes.
    Var dropout(Var a, double rate, std::mt19937_64& rng) {
        if (rate <= 0.0) return a;
        if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
        std::bernoulli_distribution keep(1.0 - rate);
        Mat mask(val(a).rows(), val(a).cols());
        const double scale = 1.0 / (1.0 - rate);
        for (Eigen::Index i = 0; i < mask.rows(); ++i)
            for (Eigen::Index j = 0; j < mask.cols(); ++j)
                mask(i, j) = keep(rng) ? scale : 0.0;
        Mat v = val(a).cwiseProduct(mask);
        auto m = std::make_shared<Mat>(std::move(mask));
        return unary(a, std::move(v), [m](Tape& t, Node& self, int ia) {
            t.acc(ia) += self.grad.cwiseProduct(*m);
        });
    }

    // Mean over the batch of -log softmax(scores_row)[target]. scores: B x E.
    Var cross_entropy_mean(Var scores, const std::vector<int>& targets) {
        const Mat& s = val(scores);
        if (static_cast<size_t>(s.rows()) != targets.size())
            throw std::invalid_argument("cross_entropy_mean: batch size mismatch");
        const double B = static_cast<double>(s.rows());
        Mat probs(s.rows(), s.cols());
        double loss = 0.0;
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            const double mx = s.row(i).maxCoeff();
            Eigen::ArrayXd ex = (s.row(i).array() - mx).exp();
            const double z = ex.sum();
            probs.row(i) = (ex / z).matrix();
            loss += std::log(z) + mx - s(i, targets[static_cast<size_t>(i)]);
        }
        Mat v(1, 1);
        v(0, 0) = loss / B;
        auto p = std::make_shared<Mat>(std::move(probs));
        auto tg = std::make_shared<std::vector<int>>(targets);
        return unary(scores, std::move(v), [p, tg, B](Tape& t, Node& self, int ia) {
            const double g = self.grad(0, 0) / B;
            Mat& acc = t.acc(ia);
            acc += g * (*p);
            for (Eigen::Index i = 0; i < p->rows(); ++i)
                acc(i, (*tg)[static_cast<size_t>(i)]) -= g;
        });
    }

    Var sum_all(Var a) {
        Mat v(1, 1);
        v(0, 0) = val(a).sum();
        return unary(a, std::move(v), [](Tape& t, Node& self, int ia) {
            t.acc(ia).array() += self.grad(0, 0);
        });
    }

    // Seed must be 1x1 (a scalar loss).
    void backward(Var seed) {
        if (!record_) throw std::logic_error("backward() on a non-recording tape");
        Node& s = node(seed);
        if ((s.ref ? s.ref->size() : s.value.size()) != 1)
            throw std::invalid_argument("backward: seed must be scalar");
        s.grad = Mat::Ones(1, 1);
        for (int i = seed.id; i >= 0; --i) {
            Node& n = nodes_[i];
            if (n.grad.size() == 0 || !n.pull) continue;
            n.pull(*this, n);
        }
    }

private:
    struct Node {
        Mat value;
        const Mat* ref = nullptr;  // leaf view into a Parameter's value
        Parameter* param = nullptr;
        Mat grad;
        bool needs_grad = false;
        std::function<void(Tape&, Node&)> pull;
    };

    Node& node(Var v) {
        if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size())
            throw std::invalid_argument("invalid Var");
        return nodes_[static_cast<size_t>(v.id)];
    }
    const Node& node(Var v) const {
        if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size())
            throw std::invalid_argument("invalid Var");
        return nodes_[static_cast<size_t>(v.id)];
    }

    Var push(Node n) {
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    bool wants(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }

    // Lazily-allocated gradient accumulator for node `id`.
    Mat& acc(int id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (n.grad.size() == 0) {
            const Mat& v = n.ref ? *n.ref : n.value;
            n.grad = Mat::Zero(v.rows(), v.cols());
        }
        return n.grad;
    }

    template <typename F>
    Var unary(Var a, Mat v, F&& back) {
        Node n;
        n.value = std::move(v);
        if (record_ && node(a).needs_grad) {
            n.needs_grad = true;
            n.pull = [ia = a.id, back = std::forward<F>(back)](Tape& t, Node& self) {
                back(t, self, ia);
            };
        }
        return push(std::move(n));
    }

    template <typename F>
    Var binary(Var a, Var b, Mat v, F&& back) {
        Node n;
        n.value = std::move(v);
        if (record_ && (node(a).needs_grad || node(b).needs_grad)) {
            n.needs_grad = true;
            n.pull = [ia = a.id, ib = b.id, back = std::forward<F>(back)](Tape& t, Node& self) {
                back(t, self, ia, ib);
            };
        }
        return push(std::move(n));
    }

    template <typename F>
    Var nary(const std::vector<Var>& xs, Mat v, F&& back) {
        Node n;
        n.value = std::move(v);
        bool needs = false;
        for (Var x : xs) needs = needs || node(x).needs_grad;
        if (record_ && needs) {
            n.needs_grad = true;
            n.pull = std::forward<F>(back);
        }
        return push(std::move(n));
    }

    void check_same_shape(Var a, Var b, const char* op) const {
        if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
            throw std::invalid_argument(std::string(op) + ": shape mismatch");
    }
    void check_cols_rows(Var a, Var b, const char* op) const {
        if (val(a).cols() != val(b).rows())
            throw std::invalid_argument(std::string(op) + ": inner dimensions differ");
    }

    bool record_;
    std::vector<Node> nodes_;
};

}  // namespace rlgnet::ad
