#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "rlgnet/nn.hpp"
#include "test_helpers.hpp"

using namespace rlgnet;
using ad::Mat;
using ad::Tape;
using ad::Var;

TEST_CASE("numeric embedding: x = 0 collapses to biases") {
    std::mt19937_64 rng(1);
    nn::ParamStore store;
    auto emb = nn::NumericEmbedder::make(store, "v", 12, rng);
    Tape t(false);
    const Mat out = t.val(emb.embed_one(t, 0.0));
    REQUIRE(out.cols() == 12);
    for (int j = 0; j < 6; ++j) {
        CHECK(out(0, j) == Catch::Approx(std::cos(emb.b_cos->value(0, j))));
        CHECK(out(0, j + 6) == Catch::Approx(std::tanh(emb.b_tanh->value(0, j))));
    }
}

TEST_CASE("numeric embedding: ranges and fixed output dimension") {
    std::mt19937_64 rng(2);
    nn::ParamStore store;
    auto emb = nn::NumericEmbedder::make(store, "v", 20, rng);
    std::uniform_real_distribution<double> xs(-1e4, 1e4);
    for (int i = 0; i < 50; ++i) {
        Tape t(false);
        const Mat out = t.val(emb.embed_one(t, xs(rng)));
        REQUIRE(out.rows() == 1);
        REQUIRE(out.cols() == 20);
        for (int j = 0; j < 10; ++j) {
            CHECK(out(0, j) >= -1.0);
            CHECK(out(0, j) <= 1.0);
            CHECK(out(0, j + 10) > -1.0);
            CHECK(out(0, j + 10) < 1.0);
        }
    }
}

TEST_CASE("numeric embedding: cosine-branch periodicity with hand-set parameters") {
    std::mt19937_64 rng(3);
    nn::ParamStore store;
    auto emb = nn::NumericEmbedder::make(store, "v", 4, rng);
    emb.w_cos->value << 0.5, 2.0;
    emb.b_cos->value << 0.3, -0.7;
    const double pi = std::acos(-1.0);
    Tape t(false);
    const Mat a = t.val(emb.embed(t, {1.7}));
    const Mat b0 = t.val(emb.embed(t, {1.7 + 2.0 * pi / 0.5}));
    const Mat b1 = t.val(emb.embed(t, {1.7 + 2.0 * pi / 2.0}));
    CHECK(a(0, 0) == Catch::Approx(b0(0, 0)).margin(1e-9));
    CHECK(a(0, 1) == Catch::Approx(b1(0, 1)).margin(1e-9));
}

TEST_CASE("numeric embedding: rejects non-finite input") {
    std::mt19937_64 rng(4);
    nn::ParamStore store;
    auto emb = nn::NumericEmbedder::make(store, "v", 8, rng);
    Tape t(false);
    CHECK_THROWS_AS(emb.embed(t, {std::nan("")}), Error);
    CHECK_THROWS_AS(emb.embed(t, {INFINITY}), Error);
}

TEST_CASE("numeric embedding: analytic gradients match finite differences") {
    std::mt19937_64 rng(5);
    nn::ParamStore store;
    auto emb = nn::NumericEmbedder::make(store, "v", 10, rng);
    const std::vector<double> xs{0.0, 1.0, -3.5, 12.0};
    auto build = [&](Tape& t) {
        // weighted sum so every coordinate contributes asymmetrically
        Var e = emb.embed(t, xs);
        Mat w(10, 1);
        for (int i = 0; i < 10; ++i) w(i, 0) = 0.1 * (i + 1);
        Mat wcols(4, 1);
        for (int i = 0; i < 4; ++i) wcols(i, 0) = 0.3 * (i + 1);
        return t.sum_all(t.matmul(t.scale_rows(e, t.constant(wcols)), t.constant(w)));
    };
    auto loss = [&] {
        Tape t(false);
        return t.val(build(t))(0, 0);
    };
    store.zero_grad();
    Tape t(true);
    t.backward(build(t));
    for (const auto& p : store.all()) {
        auto res = test::finite_difference_check(*p, loss, rng, 8);
        INFO(p->name << " " << res.worst);
        CHECK(res.max_rel_err < 1e-4);
    }
}
