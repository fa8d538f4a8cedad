#include "oracles.hpp"

#include "nslab/errors.hpp"
#include "nslab/layers.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace nslab;

TEST_SUITE("nn-engine") {

TEST_CASE("tensor construction checks length") {
    CHECK_THROWS_AS(Tensor4({1, 1, 2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
    Tensor4 t({1, 2, 2, 2}, 1.5);
    CHECK(t.size() == 8);
    CHECK(t.at(0, 1, 1, 1) == 1.5);
}

TEST_CASE("output dimension arithmetic") {
    CHECK(conv_out_dim(28, 3, 1, 1) == 28);
    CHECK(conv_out_dim(5, 3, 2, 0) == 2);
    CHECK(transpose_conv_out_dim(7, 3, 2, 1, 1) == 14);
    CHECK(transpose_conv_out_dim(14, 3, 2, 1, 1) == 28);
    CHECK_THROWS_AS(conv_out_dim(2, 5, 1, 0), ShapeError);
}

TEST_CASE("conv identity kernel reproduces input") {
    std::mt19937_64 rng(1);
    Tensor4 x = oracle::random_tensor({1, 1, 3, 3}, rng);
    Tensor4 k({1, 1, 3, 3});
    k.at(0, 0, 1, 1) = 1.0;
    Tensor4 y = conv2d_forward(x, k, {0.0}, 1, 1);
    CHECK(y.raw() == x.raw());
}

TEST_CASE("conv hand dot product") {
    Tensor4 x({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
    Tensor4 k({1, 1, 2, 2}, 1.0);
    Tensor4 y = conv2d_forward(x, k, {0.0}, 1, 0);
    REQUIRE(y.shape() == Shape4{1, 1, 1, 1});
    CHECK(y[0] == 10.0);
}

TEST_CASE("conv of zeros is the bias") {
    Tensor4 y = conv2d_forward(Tensor4({1, 1, 4, 4}), Tensor4({1, 1, 3, 3}, 0.7), {0.5}, 1, 1);
    for (double v : y.raw()) CHECK(v == 0.5);
}

TEST_CASE("conv and transpose conv agree with direct formulas") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t s = 1 + trial % 2, p = (trial / 2) % 2;
        Tensor4 x = oracle::random_tensor({2, 3, 5, 5}, rng);
        Tensor4 k = oracle::random_tensor({4, 3, 3, 3}, rng);
        auto b = oracle::random_vector(4, rng);
        CHECK(oracle::rel_error(conv2d_forward(x, k, b, s, p).raw(),
                                oracle::conv(x, k, b, static_cast<long>(s), static_cast<long>(p)).raw()) < 1e-13);
        const std::size_t op = s == 2 ? trial % 2 : 0;
        Tensor4 kt = oracle::random_tensor({3, 2, 3, 3}, rng);
        auto bt = oracle::random_vector(2, rng);
        CHECK(oracle::rel_error(transpose_conv2d_forward(x, kt, bt, s, p, op).raw(),
                                oracle::tconv(x, kt, bt, static_cast<long>(s), static_cast<long>(p),
                                              static_cast<long>(op))
                                    .raw()) < 1e-13);
    }
}

TEST_CASE("transpose conv scalar and block scatter") {
    Tensor4 y = transpose_conv2d_forward(Tensor4({1, 1, 1, 1}, 3.0), Tensor4({1, 1, 1, 1}, 0.5), {0.0}, 1, 0, 0);
    CHECK(y[0] == 1.5);

    Tensor4 x({1, 1, 2, 2}, std::vector<double>{1, 0, 0, 1});
    Tensor4 z = transpose_conv2d_forward(x, Tensor4({1, 1, 2, 2}, 1.0), {0.0}, 2, 0, 0);
    REQUIRE(z.shape() == Shape4{1, 1, 4, 4});
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) CHECK(z.at(0, 0, r, c) == ((r / 2 == c / 2) ? 1.0 : 0.0));
}

TEST_CASE("transpose conv is the adjoint of conv") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t s = 1 + trial % 2, p = trial % 3 == 0 ? 0 : 1;
        const Shape4 xs{2, 3, 6, 6};
        Tensor4 x = oracle::random_tensor(xs, rng);
        Tensor4 k = oracle::random_tensor({4, 3, 3, 3}, rng);
        Tensor4 cx = conv2d_forward(x, k, {0, 0, 0, 0}, s, p);
        Tensor4 y = oracle::random_tensor(cx.shape(), rng);
        // Output padding recovers the rows the conv floor dropped.
        const std::size_t op = xs.h - transpose_conv_out_dim(cx.shape().h, 3, s, p, 0);
        Tensor4 ty = transpose_conv2d_forward(y, k, {0, 0, 0}, s, p, op);
        REQUIRE(ty.shape() == xs);
        CHECK(std::abs(oracle::inner(cx, y) - oracle::inner(x, ty)) < 1e-10);
    }
}

TEST_CASE("shape and numeric errors") {
    CHECK_THROWS_AS(conv2d_forward(Tensor4({1, 2, 4, 4}), Tensor4({1, 3, 3, 3}), {0.0}, 1, 1), ShapeError);
    Tensor4 bad({1, 1, 3, 3});
    bad[4] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(conv2d_forward(bad, Tensor4({1, 1, 3, 3}), {0.0}, 1, 1), NumericError);
    CHECK_THROWS_AS(LayerSpec::transpose_conv(1, 1, 3, 2, 1, 2).validate(), ShapeError);
}

TEST_CASE("activations") {
    Tensor4 x({1, 1, 1, 3}, std::vector<double>{-2, 0, 3});
    CHECK(activation_apply(x, ActivationKind::relu).raw() == std::vector<double>{0, 0, 3});
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(std::abs(softplus(50.0) - 50.0) < 1e-12);
    CHECK(std::isfinite(softplus(1000.0)));
    CHECK(softplus(-1000.0) >= 0.0);
    Tensor4 g({1, 1, 1, 3}, 1.0);
    CHECK(activation_backward(x, g, ActivationKind::relu).raw() == std::vector<double>{0, 0, 1});
}

TEST_CASE("softplus is smooth at step 0.1 on [-5, 5]") {
    double worst = 0.0;
    for (int i = -49; i <= 49; ++i) {
        const double t = 0.1 * i;
        worst = std::max(worst, std::abs(softplus(t + 0.1) + softplus(t - 0.1) - 2.0 * softplus(t)));
    }
    CHECK(worst <= 0.003);
}

TEST_CASE("max pool value, routing and ties") {
    Tensor4 x({1, 1, 2, 2}, std::vector<double>{0, 0, 2, 1});
    PoolResult r = pool_forward(x, PoolKind::max);
    CHECK(r.output[0] == 2.0);
    CHECK(r.routing[0] == 2); // flat offset of (1, 0)

    PoolResult tie = pool_forward(Tensor4({1, 1, 2, 2}, 0.3), PoolKind::max);
    CHECK(tie.routing[0] == 0);
    CHECK(tie.output[0] == 0.3);
}

TEST_CASE("average pool of the two-input toy is constant") {
    for (double t : {0.0, 0.4, 1.3, 2.0}) {
        Tensor4 x({1, 1, 2, 2}, std::vector<double>{0, 0, 2 - t, t});
        PoolResult r = pool_forward(x, PoolKind::average);
        CHECK(r.output[0] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(r.routing.empty());
    }
}

TEST_CASE("pool window must tile the input") {
    CHECK_THROWS_AS(pool_forward(Tensor4({1, 1, 3, 3}), PoolKind::max), ShapeError);
}

TEST_CASE("max pool backward routes to the argmax only") {
    Tensor4 x({1, 1, 2, 2}, std::vector<double>{0.1, 0.9, 0.3, 0.2});
    PoolResult r = pool_forward(x, PoolKind::max);
    Tensor4 g = pool_backward(x.shape(), r, Tensor4({1, 1, 1, 1}, 2.0), PoolKind::max);
    CHECK(g.raw() == std::vector<double>{0, 2, 0, 0});
}

TEST_CASE("layer gradients match central differences") {
    std::mt19937_64 rng(4);
    for (const auto& kind : oracle::layer_kinds()) {
        for (int trial = 0; trial < 5; ++trial) {
            const auto res = oracle::check_layer_gradients(kind, rng);
            INFO(kind << " trial " << trial);
            CHECK(res.error < 1e-4);
        }
    }
}

} // TEST_SUITE
