#include "nslab/layers.hpp"

#include "nslab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace nslab {

namespace {

// Visits every (kernel offset, small row, large row) triple whose large row is
// in range, handing the callback the contiguous run of small columns
// [c0, c1) that map to in-range large columns starting at C0 with step s.
template <class Fn>
void for_each_tap(std::size_t small_h, std::size_t small_w, std::size_t large_h, std::size_t large_w, std::size_t k,
                  std::size_t s, std::size_t p, Fn&& fn) {
    const auto sl = static_cast<long>(s);
    const auto pl = static_cast<long>(p);
    for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t r = 0; r < small_h; ++r) {
            const long R = static_cast<long>(r) * sl + static_cast<long>(ky) - pl;
            if (R < 0 || R >= static_cast<long>(large_h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
                const long off = static_cast<long>(kx) - pl;
                long c0 = off >= 0 ? 0 : (-off + sl - 1) / sl;
                long c1 = (static_cast<long>(large_w) - 1 - off) / sl + 1;
                if (static_cast<long>(large_w) - 1 - off < 0) c1 = 0;
                c1 = std::min(c1, static_cast<long>(small_w));
                if (c0 >= c1) continue;
                fn(ky, kx, r, static_cast<std::size_t>(R), static_cast<std::size_t>(c0), static_cast<std::size_t>(c1),
                   static_cast<std::size_t>(c0 * sl + off));
            }
        }
    }
}

void require_finite(const Tensor4& t, const char* what) {
    if (!t.all_finite()) throw NumericError(std::string(what) + ": non-finite input");
}

void check_conv_shapes(const Tensor4& input, const Tensor4& kernel, std::size_t in_channel_dim, const char* op) {
    const auto& ks = kernel.shape();
    const std::size_t c_in = in_channel_dim == 0 ? ks.n : ks.c;
    if (ks.h != ks.w || ks.h == 0 || input.shape().c != c_in)
        throw ShapeError(std::string(op) + ": input " + input.shape().str() + " incompatible with kernel " + ks.str());
}

} // namespace

std::string to_string(LayerKind k) {
    switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::transpose_conv: return "transpose_conv";
    case LayerKind::activation: return "activation";
    case LayerKind::pool: return "pool";
    }
    return "?";
}

std::string to_string(ActivationKind k) {
    switch (k) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::softplus: return "softplus";
    case ActivationKind::identity: return "identity";
    }
    return "?";
}

std::string to_string(PoolKind k) { return k == PoolKind::max ? "max" : "average"; }

LayerSpec LayerSpec::conv(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t s, std::size_t p) {
    LayerSpec l;
    l.kind = LayerKind::conv;
    l.in_channels = c_in;
    l.out_channels = c_out;
    l.kernel = k;
    l.stride = s;
    l.padding = p;
    return l;
}

LayerSpec LayerSpec::transpose_conv(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t s, std::size_t p,
                                    std::size_t op) {
    LayerSpec l = conv(c_in, c_out, k, s, p);
    l.kind = LayerKind::transpose_conv;
    l.output_padding = op;
    return l;
}

LayerSpec LayerSpec::act(ActivationKind a) {
    LayerSpec l;
    l.kind = LayerKind::activation;
    l.activation = a;
    return l;
}

LayerSpec LayerSpec::pooling(PoolKind kind, std::size_t k, std::size_t s) {
    LayerSpec l;
    l.kind = LayerKind::pool;
    l.pool = kind;
    l.kernel = k;
    l.stride = s;
    return l;
}

Shape4 LayerSpec::kernel_shape() const {
    if (kind == LayerKind::conv) return {out_channels, in_channels, kernel, kernel};
    if (kind == LayerKind::transpose_conv) return {in_channels, out_channels, kernel, kernel};
    return {};
}

void LayerSpec::validate() const {
    if (kernel < 1 || stride < 1) throw ShapeError("layer: kernel and stride must be >= 1");
    if (parametric() && (in_channels == 0 || out_channels == 0)) throw ShapeError("layer: zero channel count");
    if (kind == LayerKind::transpose_conv && output_padding >= stride)
        throw ShapeError("transpose_conv: output_padding must be < stride");
}

std::size_t conv_out_dim(std::size_t in, std::size_t k, std::size_t s, std::size_t p) {
    if (in + 2 * p < k)
        throw ShapeError("conv: kernel " + std::to_string(k) + " exceeds padded input " + std::to_string(in + 2 * p));
    return (in + 2 * p - k) / s + 1;
}

std::size_t transpose_conv_out_dim(std::size_t in, std::size_t k, std::size_t s, std::size_t p, std::size_t op) {
    if (in == 0) throw ShapeError("transpose_conv: empty input");
    const long out = static_cast<long>((in - 1) * s + k + op) - 2 * static_cast<long>(p);
    if (out < 1) throw ShapeError("transpose_conv: non-positive output size");
    return static_cast<std::size_t>(out);
}

Shape4 LayerSpec::output_shape(const Shape4& in) const {
    validate();
    switch (kind) {
    case LayerKind::conv:
        if (in.c != in_channels) throw ShapeError("conv: expected " + std::to_string(in_channels) + " channels, got " + in.str());
        return {in.n, out_channels, conv_out_dim(in.h, kernel, stride, padding), conv_out_dim(in.w, kernel, stride, padding)};
    case LayerKind::transpose_conv:
        if (in.c != in_channels)
            throw ShapeError("transpose_conv: expected " + std::to_string(in_channels) + " channels, got " + in.str());
        return {in.n, out_channels, transpose_conv_out_dim(in.h, kernel, stride, padding, output_padding),
                transpose_conv_out_dim(in.w, kernel, stride, padding, output_padding)};
    case LayerKind::activation: return in;
    case LayerKind::pool:
        if (in.h < kernel || in.w < kernel || (in.h - kernel) % stride != 0 || (in.w - kernel) % stride != 0)
            throw ShapeError("pool: window " + std::to_string(kernel) + "/" + std::to_string(stride) +
                             " does not tile input " + in.str());
        return {in.n, in.c, (in.h - kernel) / stride + 1, (in.w - kernel) / stride + 1};
    }
    return in;
}

Tensor4 conv2d_forward(const Tensor4& input, const Tensor4& kernel, const std::vector<double>& bias,
                       std::size_t stride, std::size_t padding) {
    check_conv_shapes(input, kernel, 1, "conv2d_forward");
    require_finite(input, "conv2d_forward");
    const auto& is = input.shape();
    const auto& ks = kernel.shape();
    if (bias.size() != ks.n) throw ShapeError("conv2d_forward: bias length does not match kernel " + ks.str());
    if (stride == 0) throw ShapeError("conv2d_forward: zero stride");
    const std::size_t k = ks.h;
    Shape4 os{is.n, ks.n, conv_out_dim(is.h, k, stride, padding), conv_out_dim(is.w, k, stride, padding)};
    Tensor4 out(os);
    for (std::size_t n = 0; n < is.n; ++n) {
        for (std::size_t co = 0; co < ks.n; ++co) {
            double* o = out.plane(n, co);
            std::fill(o, o + os.plane(), bias[co]);
            for (std::size_t ci = 0; ci < is.c; ++ci) {
                const double* in = input.plane(n, ci);
                const double* w = kernel.plane(co, ci);
                for_each_tap(os.h, os.w, is.h, is.w, k, stride, padding,
                             [&](std::size_t ky, std::size_t kx, std::size_t r, std::size_t R, std::size_t c0,
                                 std::size_t c1, std::size_t C0) {
                                 const double wv = w[ky * k + kx];
                                 double* orow = o + r * os.w;
                                 const double* irow = in + R * is.w + C0;
                                 for (std::size_t c = c0, j = 0; c < c1; ++c, j += stride) orow[c] += wv * irow[j];
                             });
            }
        }
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor4& input, const Tensor4& kernel, const Tensor4& grad_out, std::size_t stride,
                          std::size_t padding) {
    check_conv_shapes(input, kernel, 1, "conv2d_backward");
    const auto& is = input.shape();
    const auto& ks = kernel.shape();
    const auto& os = grad_out.shape();
    const std::size_t k = ks.h;
    if (os != Shape4{is.n, ks.n, conv_out_dim(is.h, k, stride, padding), conv_out_dim(is.w, k, stride, padding)})
        throw ShapeError("conv2d_backward: grad_out " + os.str() + " does not match forward output");
    ConvGrads g{Tensor4(is), Tensor4(ks), std::vector<double>(ks.n, 0.0)};
    for (std::size_t n = 0; n < is.n; ++n) {
        for (std::size_t co = 0; co < ks.n; ++co) {
            const double* go = grad_out.plane(n, co);
            for (std::size_t i = 0; i < os.plane(); ++i) g.bias[co] += go[i];
            for (std::size_t ci = 0; ci < is.c; ++ci) {
                const double* in = input.plane(n, ci);
                double* gi = g.input.plane(n, ci);
                const double* w = kernel.plane(co, ci);
                double* gw = g.kernel.plane(co, ci);
                for_each_tap(os.h, os.w, is.h, is.w, k, stride, padding,
                             [&](std::size_t ky, std::size_t kx, std::size_t r, std::size_t R, std::size_t c0,
                                 std::size_t c1, std::size_t C0) {
                                 const double wv = w[ky * k + kx];
                                 const double* grow = go + r * os.w;
                                 const double* irow = in + R * is.w + C0;
                                 double* girow = gi + R * is.w + C0;
                                 double acc = 0.0;
                                 for (std::size_t c = c0, j = 0; c < c1; ++c, j += stride) {
                                     acc += grow[c] * irow[j];
                                     girow[j] += wv * grow[c];
                                 }
                                 gw[ky * k + kx] += acc;
                             });
            }
        }
    }
    return g;
}

Tensor4 transpose_conv2d_forward(const Tensor4& input, const Tensor4& kernel, const std::vector<double>& bias,
                                 std::size_t stride, std::size_t padding, std::size_t output_padding) {
    check_conv_shapes(input, kernel, 0, "transpose_conv2d_forward");
    require_finite(input, "transpose_conv2d_forward");
    const auto& is = input.shape();
    const auto& ks = kernel.shape();
    if (bias.size() != ks.c) throw ShapeError("transpose_conv2d_forward: bias length does not match kernel " + ks.str());
    if (stride == 0) throw ShapeError("transpose_conv2d_forward: zero stride");
    const std::size_t k = ks.h;
    Shape4 os{is.n, ks.c, transpose_conv_out_dim(is.h, k, stride, padding, output_padding),
              transpose_conv_out_dim(is.w, k, stride, padding, output_padding)};
    Tensor4 out(os);
    for (std::size_t n = 0; n < is.n; ++n) {
        for (std::size_t co = 0; co < ks.c; ++co) {
            double* o = out.plane(n, co);
            std::fill(o, o + os.plane(), bias[co]);
            for (std::size_t ci = 0; ci < is.c; ++ci) {
                const double* in = input.plane(n, ci);
                const double* w = kernel.plane(ci, co);
                for_each_tap(is.h, is.w, os.h, os.w, k, stride, padding,
                             [&](std::size_t ky, std::size_t kx, std::size_t r, std::size_t R, std::size_t c0,
                                 std::size_t c1, std::size_t C0) {
                                 const double wv = w[ky * k + kx];
                                 const double* irow = in + r * is.w;
                                 double* orow = o + R * os.w + C0;
                                 for (std::size_t c = c0, j = 0; c < c1; ++c, j += stride) orow[j] += wv * irow[c];
                             });
            }
        }
    }
    return out;
}

ConvGrads transpose_conv2d_backward(const Tensor4& input, const Tensor4& kernel, const Tensor4& grad_out,
                                    std::size_t stride, std::size_t padding) {
    check_conv_shapes(input, kernel, 0, "transpose_conv2d_backward");
    const auto& is = input.shape();
    const auto& ks = kernel.shape();
    const auto& os = grad_out.shape();
    const std::size_t k = ks.h;
    if (os.n != is.n || os.c != ks.c) throw ShapeError("transpose_conv2d_backward: grad_out " + os.str() + " mismatch");
    ConvGrads g{Tensor4(is), Tensor4(ks), std::vector<double>(ks.c, 0.0)};
    for (std::size_t n = 0; n < is.n; ++n) {
        for (std::size_t co = 0; co < ks.c; ++co) {
            const double* go = grad_out.plane(n, co);
            for (std::size_t i = 0; i < os.plane(); ++i) g.bias[co] += go[i];
            for (std::size_t ci = 0; ci < is.c; ++ci) {
                const double* in = input.plane(n, ci);
                double* gi = g.input.plane(n, ci);
                const double* w = kernel.plane(ci, co);
                double* gw = g.kernel.plane(ci, co);
                for_each_tap(is.h, is.w, os.h, os.w, k, stride, padding,
                             [&](std::size_t ky, std::size_t kx, std::size_t r, std::size_t R, std::size_t c0,
                                 std::size_t c1, std::size_t C0) {
                                 const double wv = w[ky * k + kx];
                                 const double* irow = in + r * is.w;
                                 double* girow = gi + r * is.w;
                                 const double* grow = go + R * os.w + C0;
                                 double acc = 0.0;
                                 for (std::size_t c = c0, j = 0; c < c1; ++c, j += stride) {
                                     acc += irow[c] * grow[j];
                                     girow[c] += wv * grow[j];
                                 }
                                 gw[ky * k + kx] += acc;
                             });
            }
        }
    }
    return g;
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

double softplus(double x) {
    // ln(1 + e^x) = max(x, 0) + ln(1 + e^-|x|)
    return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
}

namespace {
double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}
} // namespace

Tensor4 activation_apply(const Tensor4& x, ActivationKind kind) {
    Tensor4 y(x.shape());
    auto in = x.values();
    auto out = y.values();
    switch (kind) {
    case ActivationKind::relu:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = relu(in[i]);
        break;
    case ActivationKind::softplus:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = softplus(in[i]);
        break;
    case ActivationKind::identity: y = x; break;
    }
    return y;
}

Tensor4 activation_backward(const Tensor4& x, const Tensor4& grad_out, ActivationKind kind) {
    if (x.shape() != grad_out.shape()) throw ShapeError("activation_backward: shape mismatch");
    Tensor4 g(x.shape());
    auto in = x.values();
    auto go = grad_out.values();
    auto out = g.values();
    switch (kind) {
    case ActivationKind::relu:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? go[i] : 0.0;
        break;
    case ActivationKind::softplus:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = go[i] * sigmoid(in[i]);
        break;
    case ActivationKind::identity: g = grad_out; break;
    }
    return g;
}

PoolResult pool_forward(const Tensor4& x, PoolKind kind, std::size_t k, std::size_t s) {
    const Shape4 os = LayerSpec::pooling(kind, k, s).output_shape(x.shape());
    const auto& is = x.shape();
    PoolResult res{Tensor4(os), {}};
    if (kind == PoolKind::max) res.routing.resize(os.size());
    const double inv = 1.0 / static_cast<double>(k * k);
    std::size_t oi = 0;
    for (std::size_t n = 0; n < is.n; ++n) {
        for (std::size_t c = 0; c < is.c; ++c) {
            const double* in = x.plane(n, c);
            const std::size_t base = (n * is.c + c) * is.plane();
            for (std::size_t r = 0; r < os.h; ++r) {
                for (std::size_t q = 0; q < os.w; ++q, ++oi) {
                    if (kind == PoolKind::max) {
                        std::size_t best = (r * s) * is.w + q * s;
                        for (std::size_t dy = 0; dy < k; ++dy)
                            for (std::size_t dx = 0; dx < k; ++dx) {
                                const std::size_t idx = (r * s + dy) * is.w + q * s + dx;
                                if (in[idx] > in[best]) best = idx;
                            }
                        res.output[oi] = in[best];
                        res.routing[oi] = base + best;
                    } else {
                        double acc = 0.0;
                        for (std::size_t dy = 0; dy < k; ++dy)
                            for (std::size_t dx = 0; dx < k; ++dx) acc += in[(r * s + dy) * is.w + q * s + dx];
                        res.output[oi] = acc * inv;
                    }
                }
            }
        }
    }
    return res;
}

Tensor4 pool_backward(const Shape4& input_shape, const PoolResult& fwd, const Tensor4& grad_out, PoolKind kind,
                      std::size_t k, std::size_t s) {
    if (grad_out.shape() != fwd.output.shape()) throw ShapeError("pool_backward: grad_out shape mismatch");
    Tensor4 g(input_shape);
    if (kind == PoolKind::max) {
        for (std::size_t i = 0; i < grad_out.size(); ++i) g[fwd.routing[i]] += grad_out[i];
        return g;
    }
    const auto& os = grad_out.shape();
    const double inv = 1.0 / static_cast<double>(k * k);
    for (std::size_t n = 0; n < os.n; ++n)
        for (std::size_t c = 0; c < os.c; ++c) {
            const double* go = grad_out.plane(n, c);
            double* gi = g.plane(n, c);
            for (std::size_t r = 0; r < os.h; ++r)
                for (std::size_t q = 0; q < os.w; ++q)
                    for (std::size_t dy = 0; dy < k; ++dy)
                        for (std::size_t dx = 0; dx < k; ++dx)
                            gi[(r * s + dy) * input_shape.w + q * s + dx] += go[r * os.w + q] * inv;
        }
    return g;
}

} // namespace nslab
