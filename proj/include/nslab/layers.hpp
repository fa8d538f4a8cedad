#pragma once

/*
 * Layer kernels for the autoencoder engine.
 *
 * Shape conventions (NCHW):
 *   conv kernel:           (C_out, C_in, k, k)
 *   transpose-conv kernel: (C_in, C_out, k, k)
 *
 * Spatial arithmetic:
 *   conv:            N = floor((M + 2p - k) / s) + 1
 *   transpose conv:  N = (M - 1) s - 2p + k + output_padding
 *
 * Both ops share one tap relation between the "small" side (conv output,
 * transpose-conv input) and the "large" side (conv input, transpose-conv
 * output): large = small * s - p + kernel_offset. Transpose conv is the
 * exact adjoint of conv under that relation.
 */

#include "nslab/tensor.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace nslab {

enum class LayerKind { conv, transpose_conv, activation, pool };
enum class ActivationKind { relu, softplus, identity };
enum class PoolKind { max, average };

std::string to_string(LayerKind k);
std::string to_string(ActivationKind k);
std::string to_string(PoolKind k);

struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::size_t output_padding = 0;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    ActivationKind activation = ActivationKind::identity;
    PoolKind pool = PoolKind::max;

    static LayerSpec conv(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t s, std::size_t p);
    static LayerSpec transpose_conv(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t s,
                                    std::size_t p, std::size_t op);
    static LayerSpec act(ActivationKind a);
    static LayerSpec pooling(PoolKind kind, std::size_t k = 2, std::size_t s = 2);

    bool parametric() const { return kind == LayerKind::conv || kind == LayerKind::transpose_conv; }
    Shape4 kernel_shape() const;
    /// Output dims for a given input; throws ShapeError if the geometry is invalid.
    Shape4 output_shape(const Shape4& in) const;
    void validate() const;
};

std::size_t conv_out_dim(std::size_t in, std::size_t k, std::size_t s, std::size_t p);
std::size_t transpose_conv_out_dim(std::size_t in, std::size_t k, std::size_t s, std::size_t p, std::size_t op);

// Convolution.
Tensor4 conv2d_forward(const Tensor4& input, const Tensor4& kernel, const std::vector<double>& bias,
                       std::size_t stride, std::size_t padding);

struct ConvGrads {
    Tensor4 input;
    Tensor4 kernel;
    std::vector<double> bias;
};

ConvGrads conv2d_backward(const Tensor4& input, const Tensor4& kernel, const Tensor4& grad_out, std::size_t stride,
                          std::size_t padding);

// Transpose convolution.
Tensor4 transpose_conv2d_forward(const Tensor4& input, const Tensor4& kernel, const std::vector<double>& bias,
                                 std::size_t stride, std::size_t padding, std::size_t output_padding);

ConvGrads transpose_conv2d_backward(const Tensor4& input, const Tensor4& kernel, const Tensor4& grad_out,
                                    std::size_t stride, std::size_t padding);

// Activations.
double relu(double x);
double softplus(double x);
Tensor4 activation_apply(const Tensor4& x, ActivationKind kind);
/// Gradient w.r.t. the activation input. ReLU uses subgradient 0 at exactly 0.
Tensor4 activation_backward(const Tensor4& x, const Tensor4& grad_out, ActivationKind kind);

// Pooling.
struct PoolResult {
    Tensor4 output;
    /// Max pooling only: flat offset into the input tensor of each output's source.
    std::vector<std::size_t> routing;
};

/// Ties in max pooling resolve to the first element in row-major window order.
PoolResult pool_forward(const Tensor4& x, PoolKind kind, std::size_t k = 2, std::size_t s = 2);
Tensor4 pool_backward(const Shape4& input_shape, const PoolResult& fwd, const Tensor4& grad_out, PoolKind kind,
                      std::size_t k = 2, std::size_t s = 2);

} // namespace nslab
