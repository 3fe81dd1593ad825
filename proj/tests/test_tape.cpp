#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "rlgnet/tape.hpp"
#include "test_helpers.hpp"

using namespace rlgnet;
using ad::Mat;
using ad::Parameter;
using ad::Tape;
using ad::Var;

namespace {

Mat randm(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, 0.7);
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = d(rng);
    return m;
}

// Runs backward on a scalar graph built by `build`, then finite-difference
// checks every parameter in `params`.
void check_graph(std::vector<Parameter*> params, const std::function<Var(Tape&)>& build,
                 std::mt19937_64& rng, double tol = 1e-6) {
    auto loss_value = [&] {
        Tape t(false);
        return t.val(build(t))(0, 0);
    };
    for (auto* p : params) p->grad.setZero();
    Tape t(true);
    Var loss = build(t);
    t.backward(loss);
    for (auto* p : params) {
        auto res = test::finite_difference_check(*p, loss_value, rng, 6);
        INFO(p->name << " worst: " << res.worst);
        CHECK(res.max_rel_err < tol);
    }
}

}  // namespace

TEST_CASE("tape: values of core ops") {
    Tape t(false);
    Mat a(2, 2), b(2, 2);
    a << 1, 2, 3, 4;
    b << 5, 6, 7, 8;
    Var va = t.constant(a), vb = t.constant(b);
    CHECK(t.val(t.matmul(va, vb))(0, 0) == 19);
    CHECK(t.val(t.matmul_nt(va, vb))(0, 0) == 17);
    CHECK(t.val(t.add(va, vb))(1, 1) == 12);
    CHECK(t.val(t.hadamard(va, vb))(0, 1) == 12);
    CHECK(t.val(t.one_minus(va))(0, 0) == 0);
    CHECK(t.val(t.gather_rows(va, {1, 0}))(0, 0) == 3);
    CHECK(t.val(t.mean_rows(va))(0, 0) == 2);
    CHECK(t.val(t.flatten_row(va))(0, 2) == 3);
    CHECK(t.val(t.col_of(va, 1))(1, 0) == 4);
    CHECK(t.val(t.sum_all(va))(0, 0) == 10);

    Mat row(1, 2);
    row << 10, 20;
    Var vrow = t.constant(row);
    CHECK(t.val(t.add_row(va, vrow))(1, 0) == 13);
    CHECK(t.val(t.repeat_row(vrow, 3)).rows() == 3);
    CHECK(t.val(t.hcat({va, vb})).cols() == 4);
    CHECK(t.val(t.vcat({va, vb})).rows() == 4);

    // softmax rows sum to 1
    Var sm = t.softmax_rows(va);
    CHECK(t.val(sm).row(0).sum() == Catch::Approx(1.0));
    CHECK(t.val(sm).row(1).sum() == Catch::Approx(1.0));

    // scatter ops
    Var sc = t.scatter_add_rows(va, {1, 1}, {0.5, 0.5}, 3);
    CHECK(t.val(sc)(1, 0) == 2.0);
    CHECK(t.val(sc)(0, 0) == 0.0);
    Mat vals(2, 1);
    vals << 3, 4;
    Var scr = t.scatter_cols_row(t.constant(vals), {4, 1}, 6);
    CHECK(t.val(scr)(0, 4) == 3);
    CHECK(t.val(scr)(0, 1) == 4);
    CHECK(t.val(scr)(0, 0) == 0);
}

TEST_CASE("tape: gradients of every op against finite differences") {
    std::mt19937_64 rng(123);
    Parameter A("A", randm(3, 4, rng));
    Parameter B("B", randm(4, 3, rng));
    Parameter C("C", randm(3, 4, rng));
    Parameter row("row", randm(1, 4, rng));
    Parameter colv("colv", randm(3, 1, rng));

    SECTION("matmul / add / hadamard / scale / one_minus") {
        check_graph({&A, &B}, [&](Tape& t) {
            Var x = t.matmul(t.leaf(A), t.leaf(B));  // 3x3
            x = t.hadamard(x, t.one_minus(t.scale(x, 0.3)));
            return t.sum_all(x);
        }, rng);
    }
    SECTION("matmul_nt / sub") {
        check_graph({&A, &C}, [&](Tape& t) {
            return t.sum_all(t.tanh_(t.sub(t.matmul_nt(t.leaf(A), t.leaf(C)),
                                           t.constant(Mat::Ones(3, 3)))));
        }, rng);
    }
    SECTION("add_row / repeat_row / hcat / vcat") {
        check_graph({&A, &row}, [&](Tape& t) {
            Var x = t.add_row(t.leaf(A), t.leaf(row));
            Var y = t.repeat_row(t.leaf(row), 3);
            return t.sum_all(t.tanh_(t.vcat({t.hcat({x, y}), t.hcat({y, x})})));
        }, rng);
    }
    SECTION("activations") {
        check_graph({&A}, [&](Tape& t) {
            Var x = t.leaf(A);
            return t.sum_all(t.add(t.cos_(x), t.add(t.tanh_(x), t.sigmoid_(x))));
        }, rng);
    }
    SECTION("gather / scatter rows") {
        check_graph({&A}, [&](Tape& t) {
            Var g = t.gather_rows(t.leaf(A), {2, 0, 2, 1});
            Var s = t.scatter_add_rows(g, {0, 1, 1, 3}, {0.5, 1.0, 0.25, 2.0}, 5);
            return t.sum_all(t.tanh_(s));
        }, rng);
    }
    SECTION("mean_rows / col_of / scale_rows") {
        check_graph({&A, &colv}, [&](Tape& t) {
            Var x = t.scale_rows(t.leaf(A), t.leaf(colv));
            return t.sum_all(t.tanh_(t.mean_rows(x)));
        }, rng);
        check_graph({&A, &colv}, [&](Tape& t) {
            Var x = t.scale_rows(t.leaf(A), t.leaf(colv));
            return t.sum_all(t.cos_(t.col_of(x, 2)));
        }, rng);
    }
    SECTION("softmax_rows") {
        check_graph({&A}, [&](Tape& t) {
            return t.sum_all(t.hadamard(t.softmax_rows(t.leaf(A)), t.leaf(A)));
        }, rng);
    }
    SECTION("scatter_cols_row") {
        check_graph({&colv}, [&](Tape& t) {
            Var r = t.scatter_cols_row(t.leaf(colv), {5, 0, 3}, 7);
            return t.sum_all(t.tanh_(r));
        }, rng);
    }
    SECTION("flatten / conv1d") {
        Parameter K("K", randm(4, 3 * 3, rng));
        Parameter kb("kb", randm(1, 4, rng));
        Parameter X("X", randm(3, 6, rng));
        check_graph({&K, &kb, &X}, [&](Tape& t) {
            Var fm = t.conv1d_same(t.leaf(X), t.leaf(K), t.leaf(kb), 3);
            return t.sum_all(t.tanh_(t.flatten_row(fm)));
        }, rng);
    }
    SECTION("cross entropy") {
        Parameter S("S", randm(4, 6, rng));
        check_graph({&S}, [&](Tape& t) {
            return t.cross_entropy_mean(t.leaf(S), {2, 0, 5, 1});
        }, rng);
    }
}

TEST_CASE("tape: conv1d value against hand-rolled correlation") {
    Tape t(false);
    Mat x(2, 5);
    x << 1, 2, 3, 4, 5, -1, 0, 1, 0, -1;
    Mat k(1, 6);  // one filter, 2 channels x width 3
    k << 1, 0, -1, 2, 1, 0;
    Mat b(1, 1);
    b << 0.5;
    Var out = t.conv1d_same(t.constant(x), t.constant(k), t.constant(b), 3);
    REQUIRE(t.val(out).rows() == 1);
    REQUIRE(t.val(out).cols() == 5);
    // column j: sum_c sum_w k[c,w] * x(c, j+w-1), zero-padded
    for (int j = 0; j < 5; ++j) {
        double expect = 0.5;
        for (int c = 0; c < 2; ++c)
            for (int w = 0; w < 3; ++w) {
                const int src = j + w - 1;
                if (src >= 0 && src < 5) expect += k(0, c * 3 + w) * x(c, src);
            }
        CHECK(t.val(out)(0, j) == Catch::Approx(expect));
    }
}

TEST_CASE("tape: dropout masks and rescales deterministically per seed") {
    std::mt19937_64 rng(9);
    Parameter A("A", Mat::Ones(20, 20));
    Tape t(true);
    std::mt19937_64 r1(42);
    Var d = t.dropout(t.leaf(A), 0.4, r1);
    const Mat& v = t.val(d);
    int zeros = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double x = v.data()[i];
        CHECK((x == 0.0 || x == Catch::Approx(1.0 / 0.6)));
        zeros += x == 0.0;
    }
    CHECK(zeros > 50);
    CHECK(zeros < 350);
    // identical seed -> identical mask
    Tape t2(true);
    std::mt19937_64 r2(42);
    CHECK(t2.val(t2.dropout(t2.leaf(A), 0.4, r2)) == v);
    (void)rng;
}

TEST_CASE("tape: leaf gradient accumulates across multiple uses") {
    std::mt19937_64 rng(31);
    Parameter A("A", randm(2, 2, rng));
    A.grad.setZero();
    Tape t(true);
    Var x = t.add(t.leaf(A), t.leaf(A));  // two distinct leaf nodes, same parameter
    Var loss = t.sum_all(x);
    t.backward(loss);
    CHECK(A.grad == Mat::Constant(2, 2, 2.0));
}

TEST_CASE("tape: non-recording tapes reference parameter storage") {
    std::mt19937_64 rng(32);
    Parameter A("A", randm(2, 2, rng));
    Tape t(false);
    Var leaf = t.leaf(A);
    CHECK(&t.val(leaf) == &A.value);
    CHECK_THROWS_AS(t.backward(t.sum_all(leaf)), std::logic_error);
}
