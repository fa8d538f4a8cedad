#include "nslab/network.hpp"

#include "nslab/errors.hpp"
#include "nslab/rng.hpp"

#include <cmath>
#include <random>

namespace nslab {

std::string to_string(Setup s) { return s == Setup::relu_maxpool ? "relu_maxpool" : "softplus_avepool"; }

Setup parse_setup(const std::string& s) {
    if (s == "relu_maxpool") return Setup::relu_maxpool;
    if (s == "softplus_avepool") return Setup::softplus_avepool;
    throw ConfigError("unknown setup '" + s + "'");
}

ActivationKind setup_activation(Setup s) {
    return s == Setup::relu_maxpool ? ActivationKind::relu : ActivationKind::softplus;
}

PoolKind setup_pool(Setup s) { return s == Setup::relu_maxpool ? PoolKind::max : PoolKind::average; }

std::vector<Shape4> Network::boundary_shapes() const {
    std::vector<Shape4> shapes;
    Shape4 cur{1, input_shape.c, input_shape.h, input_shape.w};
    shapes.push_back(cur);
    for (const auto& l : layers) {
        if (l.spec.parametric()) {
            if (l.weight.shape() != l.spec.kernel_shape())
                throw ShapeError("network: weight " + l.weight.shape().str() + " does not match spec " +
                                 l.spec.kernel_shape().str());
            if (l.bias.size() != l.spec.out_channels) throw ShapeError("network: bias length mismatch");
        }
        cur = l.spec.output_shape(cur);
        shapes.push_back(cur);
    }
    return shapes;
}

std::vector<std::span<double>> Network::parameters() {
    std::vector<std::span<double>> out;
    for (auto& l : layers)
        if (l.spec.parametric()) {
            out.emplace_back(l.weight.values());
            out.emplace_back(l.bias);
        }
    return out;
}

std::vector<std::span<const double>> Network::parameters() const {
    std::vector<std::span<const double>> out;
    for (const auto& l : layers)
        if (l.spec.parametric()) {
            out.emplace_back(l.weight.values());
            out.emplace_back(l.bias);
        }
    return out;
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (auto p : parameters()) n += p.size();
    return n;
}

namespace {
Layer make_layer(LayerSpec spec) {
    Layer l{spec, {}, {}};
    if (spec.parametric()) {
        l.weight = Tensor4(spec.kernel_shape());
        l.bias.assign(spec.out_channels, 0.0);
    }
    return l;
}
} // namespace

Network make_autoencoder(Setup setup, std::size_t image_size) {
    if (image_size % 4 != 0 || image_size == 0) throw ShapeError("autoencoder: image size must be a multiple of 4");
    const auto act = setup_activation(setup);
    const auto pool = setup_pool(setup);
    Network net;
    net.setup = setup;
    net.input_shape = {1, 1, image_size, image_size};
    net.layers = {
        make_layer(LayerSpec::conv(1, 8, 3, 1, 1)),
        make_layer(LayerSpec::act(act)),
        make_layer(LayerSpec::pooling(pool)),
        make_layer(LayerSpec::conv(8, 16, 3, 1, 1)),
        make_layer(LayerSpec::act(act)),
        make_layer(LayerSpec::pooling(pool)),
        make_layer(LayerSpec::transpose_conv(16, 16, 3, 2, 1, 1)),
        make_layer(LayerSpec::act(act)),
        make_layer(LayerSpec::transpose_conv(16, 8, 3, 2, 1, 1)),
        make_layer(LayerSpec::act(act)),
        make_layer(LayerSpec::transpose_conv(8, 1, 3, 1, 1, 0)),
        make_layer(LayerSpec::act(ActivationKind::identity)),
    };
    net.boundary_shapes();
    return net;
}

void initialize(Network& net, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const bool he = net.setup == Setup::relu_maxpool;
    for (auto& l : net.layers) {
        if (!l.spec.parametric()) continue;
        const auto& s = l.spec;
        const double taps = static_cast<double>(s.kernel * s.kernel);
        // A transpose conv output sees on average k^2/s^2 input taps per input channel.
        const double stride_sq = s.kind == LayerKind::transpose_conv ? static_cast<double>(s.stride * s.stride) : 1.0;
        const double fan_in = static_cast<double>(s.in_channels) * taps / stride_sq;
        const double fan_out = static_cast<double>(s.out_channels) * taps / stride_sq;
        const double bound = he ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (auto& w : l.weight.values()) w = u(rng);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
}

Tensor4 layer_forward(const Layer& layer, const Tensor4& x, PoolResult* pool_out) {
    const auto& s = layer.spec;
    switch (s.kind) {
    case LayerKind::conv: return conv2d_forward(x, layer.weight, layer.bias, s.stride, s.padding);
    case LayerKind::transpose_conv:
        return transpose_conv2d_forward(x, layer.weight, layer.bias, s.stride, s.padding, s.output_padding);
    case LayerKind::activation: return activation_apply(x, s.activation);
    case LayerKind::pool: {
        PoolResult r = pool_forward(x, s.pool, s.kernel, s.stride);
        Tensor4 out = r.output;
        if (pool_out) *pool_out = std::move(r);
        return out;
    }
    }
    return x;
}

ForwardCache forward_all(const Network& net, const Tensor4& input) {
    const auto& in = input.shape();
    if (in.c != net.input_shape.c || in.h != net.input_shape.h || in.w != net.input_shape.w)
        throw ShapeError("network: input " + in.str() + " does not match expected " + net.input_shape.str());
    ForwardCache cache;
    cache.boundaries.reserve(net.layers.size() + 1);
    cache.pools.resize(net.layers.size());
    cache.boundaries.push_back(input);
    for (std::size_t i = 0; i < net.layers.size(); ++i)
        cache.boundaries.push_back(layer_forward(net.layers[i], cache.boundaries.back(), &cache.pools[i]));
    return cache;
}

Tensor4 forward(const Network& net, const Tensor4& input) {
    const auto& in = input.shape();
    if (in.c != net.input_shape.c || in.h != net.input_shape.h || in.w != net.input_shape.w)
        throw ShapeError("network: input " + in.str() + " does not match expected " + net.input_shape.str());
    Tensor4 cur = input;
    for (const auto& l : net.layers) cur = layer_forward(l, cur);
    return cur;
}

double mse(const Tensor4& pred, const Tensor4& target) {
    if (pred.shape() != target.shape())
        throw ShapeError("mse: prediction " + pred.shape().str() + " vs target " + target.shape().str());
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

Gradients backward_and_grads(const Network& net, const Tensor4& batch_in, const Tensor4& batch_target) {
    ForwardCache cache = forward_all(net, batch_in);
    const Tensor4& out = cache.boundaries.back();
    Gradients g;
    g.loss = mse(out, batch_target);
    if (!std::isfinite(g.loss)) throw NumericError("backward_and_grads: non-finite loss");

    Tensor4 grad(out.shape());
    const double scale = 2.0 / static_cast<double>(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) grad[i] = scale * (out[i] - batch_target[i]);

    std::vector<std::vector<double>> rev; // parameter grads collected last-layer first
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const Layer& l = net.layers[li];
        const Tensor4& x = cache.boundaries[li];
        const auto& s = l.spec;
        switch (s.kind) {
        case LayerKind::conv: {
            ConvGrads cg = conv2d_backward(x, l.weight, grad, s.stride, s.padding);
            rev.push_back(std::move(cg.bias));
            rev.push_back(std::move(cg.kernel.raw()));
            grad = std::move(cg.input);
            break;
        }
        case LayerKind::transpose_conv: {
            ConvGrads cg = transpose_conv2d_backward(x, l.weight, grad, s.stride, s.padding);
            rev.push_back(std::move(cg.bias));
            rev.push_back(std::move(cg.kernel.raw()));
            grad = std::move(cg.input);
            break;
        }
        case LayerKind::activation: grad = activation_backward(x, grad, s.activation); break;
        case LayerKind::pool: grad = pool_backward(x.shape(), cache.pools[li], grad, s.pool, s.kernel, s.stride); break;
        }
    }
    g.params.assign(std::make_move_iterator(rev.rbegin()), std::make_move_iterator(rev.rend()));
    return g;
}

} // namespace nslab
