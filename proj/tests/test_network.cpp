#include "oracles.hpp"

#include "nslab/adam.hpp"
#include "nslab/errors.hpp"
#include "nslab/network.hpp"
#include "nslab/synthgen.hpp"
#include "nslab/train.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace nslab;

namespace {

std::string serialize(const Checkpoint& ck) {
    std::ostringstream os;
    write_checkpoint(os, ck);
    return os.str();
}

std::vector<double> flat_params(const Network& net) {
    std::vector<double> out;
    for (auto p : net.parameters()) out.insert(out.end(), p.begin(), p.end());
    return out;
}

} // namespace

TEST_SUITE("nn-engine") {

TEST_CASE("default autoencoder geometry") {
    for (Setup s : {Setup::relu_maxpool, Setup::softplus_avepool}) {
        Network net = make_autoencoder(s);
        REQUIRE(net.layers.size() == 12);
        const auto shapes = net.boundary_shapes();
        CHECK(shapes[0] == Shape4{1, 1, 28, 28});
        CHECK(shapes[3] == Shape4{1, 8, 14, 14});
        CHECK(shapes[6] == Shape4{1, 16, 7, 7});
        CHECK(shapes[9] == Shape4{1, 8, 28, 28});
        CHECK(shapes[12] == Shape4{1, 1, 28, 28});
        // 8*1*9+8 + 16*8*9+16 + 16*16*9+16 + 16*8*9+8 + 8*1*9+1
        CHECK(net.parameter_count() == 80 + 1168 + 2320 + 1160 + 73);
    }
}

TEST_CASE("setups differ only in activation and pool kind") {
    Network a = make_autoencoder(Setup::relu_maxpool), b = make_autoencoder(Setup::softplus_avepool);
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        const auto& x = a.layers[i].spec;
        const auto& y = b.layers[i].spec;
        CHECK(x.kind == y.kind);
        CHECK(x.kernel == y.kernel);
        CHECK(x.stride == y.stride);
        CHECK(x.in_channels == y.in_channels);
        if (x.kind == LayerKind::activation && i != 11) {
            CHECK(x.activation == ActivationKind::relu);
            CHECK(y.activation == ActivationKind::softplus);
        }
        if (x.kind == LayerKind::pool) {
            CHECK(x.pool == PoolKind::max);
            CHECK(y.pool == PoolKind::average);
        }
    }
    CHECK(a.layers[11].spec.activation == ActivationKind::identity);
}

TEST_CASE("initialization is seeded and bounded") {
    Network a = make_autoencoder(Setup::relu_maxpool), b = make_autoencoder(Setup::relu_maxpool);
    initialize(a, 7);
    initialize(b, 7);
    CHECK(flat_params(a) == flat_params(b));
    initialize(b, 8);
    CHECK(flat_params(a) != flat_params(b));
    const double bound = std::sqrt(6.0 / 9.0); // first conv, fan_in 1*3*3
    for (double w : a.layers[0].weight.raw()) CHECK(std::abs(w) <= bound);
    for (double v : a.layers[0].bias) CHECK(v == 0.0);
}

TEST_CASE("mse definition") {
    CHECK(mse(Tensor4({1, 1, 1, 2}, std::vector<double>{1, 2}), Tensor4({1, 1, 1, 2})) == 2.5);
}

TEST_CASE("identity conv on its own target has zero loss and gradient") {
    Network net;
    net.input_shape = {1, 1, 4, 4};
    Layer l{LayerSpec::conv(1, 1, 3, 1, 1), Tensor4({1, 1, 3, 3}), {0.0}};
    l.weight.at(0, 0, 1, 1) = 1.0;
    net.layers.push_back(l);
    std::mt19937_64 rng(5);
    Tensor4 x = oracle::random_tensor({2, 1, 4, 4}, rng);
    Gradients g = backward_and_grads(net, x, x);
    CHECK(g.loss == 0.0);
    for (const auto& p : g.params)
        for (double v : p) CHECK(v == 0.0);
}

TEST_CASE("whole-network gradient matches central differences") {
    for (Setup s : {Setup::relu_maxpool, Setup::softplus_avepool}) {
        Network net = make_autoencoder(s, 8);
        initialize(net, 11);
        std::mt19937_64 rng(12);
        for (auto p : net.parameters())
            for (auto& v : p) v += 0.05 * std::uniform_real_distribution<double>(-1, 1)(rng);
        Tensor4 x = oracle::random_tensor({2, 1, 8, 8}, rng, 0.0, 1.0);
        Tensor4 t = oracle::random_tensor({2, 1, 8, 8}, rng, 0.0, 1.0);
        const Gradients g = backward_and_grads(net, x, t);
        auto params = net.parameters();
        for (std::size_t i = 0; i < params.size(); ++i) {
            std::vector<double> copy(params[i].begin(), params[i].end());
            auto loss = [&] {
                std::copy(copy.begin(), copy.end(), params[i].begin());
                return mse(forward(net, x), t);
            };
            const auto num = oracle::numeric_grad(copy, loss);
            std::copy(copy.begin(), copy.end(), params[i].begin());
            INFO(to_string(s) << " parameter array " << i);
            CHECK(oracle::rel_error(g.params[i], num) < 1e-4);
        }
    }
}

TEST_CASE("adam first step and moment recursions") {
    std::vector<double> w{0.0};
    std::vector<std::span<double>> params{w};
    AdamState st(AdamHyper{}, params);
    adam_step(params, {{1.0}}, st);
    CHECK(std::abs(w[0] + 0.001) < 1e-9);
    CHECK(st.t == 1);

    adam_step(params, {{1.0}}, st);
    CHECK(st.m[0][0] == doctest::Approx(0.1 * 0.9 + 0.1).epsilon(1e-15));
    CHECK(st.v[0][0] == doctest::Approx(0.001 * 0.999 + 0.001).epsilon(1e-15));
    CHECK(st.t == 2);

    std::vector<double> z{0.25};
    std::vector<std::span<double>> zp{z};
    AdamState zs(AdamHyper{}, zp);
    adam_step(zp, {{0.0}}, zs);
    CHECK(z[0] == 0.25);
}

TEST_CASE("training is deterministic and keeps the best epoch") {
    const ImageSet train = generate_ellipsoid_dataset(48, 21, {2.5, 4, 1, 8, 4.5});
    const ImageSet val = generate_ellipsoid_dataset(16, 22, {2.5, 4, 1, 8, 4.5});
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 16;
    std::vector<EpochRecord> seen;
    const Checkpoint a = train_autoencoder(train, val, cfg, 99, [&](const EpochRecord& r) { seen.push_back(r); });
    const Checkpoint b = train_autoencoder(train, val, cfg, 99);
    CHECK(serialize(a) == serialize(b));
    REQUIRE(seen.size() == 4);
    double best = seen[0].val_loss;
    for (const auto& r : seen) best = std::min(best, r.val_loss);
    CHECK(a.val_loss == best);
    CHECK(a.history == seen);
    CHECK(evaluate_mse(a.net, val) == doctest::Approx(a.val_loss).epsilon(1e-12));
}

TEST_CASE("training on a constant image learns a near-bias solution") {
    const ImageSet zeros{Image(8, 8, 0.5)};
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 1;
    const Checkpoint ck = train_autoencoder(zeros, zeros, cfg, 3);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : ck.history) best = std::min(best, r.val_loss);
    CHECK(ck.val_loss == best);
    CHECK(ck.val_loss < ck.history.front().val_loss);
}

TEST_CASE("training rejects empty data") {
    CHECK_THROWS_AS(train_autoencoder({}, {Image(8, 8)}, {}, 1), ShapeError);
}

TEST_CASE("checkpoint round trip is bit exact") {
    Checkpoint ck;
    ck.net = make_autoencoder(Setup::softplus_avepool);
    initialize(ck.net, 5);
    ck.seed = 123;
    ck.epoch = 7;
    ck.val_loss = 0.001234;
    ck.history = {{1, 0.5, 0.4}, {2, 0.3, 0.2}};
    const std::string bytes = serialize(ck);
    CHECK(bytes.substr(0, 4) == "NSMN");
    std::istringstream is(bytes);
    const Checkpoint back = read_checkpoint(is);
    CHECK(flat_params(back.net) == flat_params(ck.net));
    CHECK(back.net.setup == ck.net.setup);
    CHECK(back.history == ck.history);
    CHECK(back.val_loss == ck.val_loss);
    CHECK(serialize(back) == bytes);
}

TEST_CASE("checkpoint format errors carry offsets") {
    Checkpoint ck;
    ck.net = make_autoencoder(Setup::relu_maxpool);
    std::string bytes = serialize(ck);

    std::istringstream bad_magic("XXXX" + bytes.substr(4));
    CHECK_THROWS_AS(read_checkpoint(bad_magic), FormatError);

    std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
    try {
        read_checkpoint(truncated);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.offset() > 4);
        CHECK(e.offset() <= bytes.size());
    }
}

} // TEST_SUITE
