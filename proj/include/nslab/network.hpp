#pragma once

#include "nslab/layers.hpp"
#include "nslab/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nslab {

/// The two building-block setups under comparison. They differ only in
/// activation and pooling kind.
enum class Setup { relu_maxpool, softplus_avepool };

std::string to_string(Setup s);
Setup parse_setup(const std::string& s);
ActivationKind setup_activation(Setup s);
PoolKind setup_pool(Setup s);

struct Layer {
    LayerSpec spec;
    Tensor4 weight;           // empty for non-parametric layers
    std::vector<double> bias; // empty for non-parametric layers
};

struct Network {
    Setup setup = Setup::relu_maxpool;
    Shape4 input_shape{1, 1, 28, 28}; // n is ignored
    std::vector<Layer> layers;

    /// Checks channel chaining and geometry; returns the per-sample shape at
    /// every boundary (boundary i is the input of layer i, boundary L the output).
    std::vector<Shape4> boundary_shapes() const;

    /// Views over every trainable array in a fixed order (weight then bias per parametric layer).
    std::vector<std::span<double>> parameters();
    std::vector<std::span<const double>> parameters() const;
    std::size_t parameter_count() const;
};

/// Default 28x28 autoencoder: two conv+act+pool encoder stages, three
/// transpose-conv decoder stages, identity output. Parameters zeroed.
Network make_autoencoder(Setup setup, std::size_t image_size = 28);

/// Seeded fan-in-scaled uniform init: He bound sqrt(6/fan_in) for ReLU,
/// Xavier bound sqrt(6/(fan_in+fan_out)) otherwise. Biases start at 0.
void initialize(Network& net, std::uint64_t seed);

/// Activations at every boundary plus max-pool routings (indexed by layer).
struct ForwardCache {
    std::vector<Tensor4> boundaries;
    std::vector<PoolResult> pools;
};

Tensor4 layer_forward(const Layer& layer, const Tensor4& x, PoolResult* pool_out = nullptr);
ForwardCache forward_all(const Network& net, const Tensor4& input);
Tensor4 forward(const Network& net, const Tensor4& input);

struct Gradients {
    double loss = 0.0;
    std::vector<std::vector<double>> params; // aligned with Network::parameters()
};

double mse(const Tensor4& pred, const Tensor4& target);

/// MSE loss over all elements and its gradient for every parameter.
Gradients backward_and_grads(const Network& net, const Tensor4& batch_in, const Tensor4& batch_target);

} // namespace nslab
