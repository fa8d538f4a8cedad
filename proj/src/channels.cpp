#include "nslab/channels.hpp"

#include "nslab/errors.hpp"
#include "nslab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>

namespace nslab {

std::string to_string(WeightMode m) { return m == WeightMode::expected ? "expected" : "actual"; }

double estimate_w0(const Tensor4& kernel) {
    if (kernel.size() == 0) throw ShapeError("estimate_w0: empty kernel");
    double s = 0.0;
    for (double w : kernel.values()) s += std::abs(w);
    return s / static_cast<double>(kernel.size());
}

ConvChannelModel ConvChannelModel::from_layer(const Layer& layer, WeightMode mode) {
    if (!layer.spec.parametric()) throw ShapeError("conv channel: layer is not conv/transpose_conv");
    ConvChannelModel m;
    m.layer = layer.spec;
    m.mode = mode;
    m.w0 = estimate_w0(layer.weight);
    m.abs_weights = layer.weight;
    for (auto& w : m.abs_weights.values()) w = std::abs(w);
    return m;
}

void ConvChannelModel::validate() const {
    if (!layer.parametric()) throw ShapeError("conv channel: geometry must be conv or transpose_conv");
    layer.validate();
    if (w0 < 0) throw ShapeError("conv channel: w0 must be >= 0");
    if (mode == WeightMode::actual && abs_weights.shape() != layer.kernel_shape())
        throw ShapeError("conv channel: weights " + abs_weights.shape().str() + " do not match layer kernel " +
                         layer.kernel_shape().str());
}

SmpMap predict_conv_smp(const SmpMap& input, const ConvChannelModel& model) {
    model.validate();
    const auto& L = model.layer;
    if (input.channels != L.in_channels)
        throw ShapeError("predict_conv_smp: input has " + std::to_string(input.channels) + " channels, model expects " +
                         std::to_string(L.in_channels));
    // The SMP sum has the same tap structure as the layer itself, so the layer
    // kernel runs with |W| (or a constant w0 kernel) and zero bias; zero
    // padding contributes no SMP.
    Tensor4 x(Shape4{1, input.channels, input.rows, input.cols}, input.values);
    Tensor4 kernel = model.mode == WeightMode::actual ? model.abs_weights : Tensor4(L.kernel_shape(), model.w0);
    const std::vector<double> zero(L.out_channels, 0.0);
    Tensor4 y = L.kind == LayerKind::conv
                    ? conv2d_forward(x, kernel, zero, L.stride, L.padding)
                    : transpose_conv2d_forward(x, kernel, zero, L.stride, L.padding, L.output_padding);
    return {input.boundary + 1, y.shape().c, y.shape().h, y.shape().w, std::move(y.raw())};
}

ReluChannelParams fit_relu_channel(std::span<const SmpPair> pairs, double eps_zero) {
    if (pairs.empty()) throw NumericError("fit_relu_channel: no pairs");
    if (pairs.size() < kMinPairsPerBranch)
        throw NumericError("fit_relu_channel: need at least " + std::to_string(kMinPairsPerBranch) + " pairs");
    ReluChannelParams p;
    p.eps_zero = eps_zero;
    std::size_t pass = 0;
    double ss = 0.0;
    for (const auto& pr : pairs) {
        if (pr.y > eps_zero) {
            ++pass;
            ss += (pr.y - pr.x) * (pr.y - pr.x);
        }
    }
    p.theta = static_cast<double>(pass) / static_cast<double>(pairs.size());
    p.sigma = pass ? std::sqrt(ss / static_cast<double>(pass)) : 0.0;
    return p;
}

namespace {
double gaussian_draw(double mean, double sigma, std::mt19937_64& rng) {
    if (sigma <= 0.0) return mean;
    std::normal_distribution<double> g(mean, sigma);
    return g(rng);
}
} // namespace

double sample_relu_channel(double x, const ReluChannelParams& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (!(u(rng) < p.theta)) return 0.0;
    return std::max(0.0, gaussian_draw(x, p.sigma, rng));
}

namespace {

double log_normal_pdf(double y, double mu, double sigma) {
    const double z = (y - mu) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(std::span<const double> v, double mean) {
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

} // namespace

MaxPoolChannelParams fit_maxpool_channel(std::span<const SmpPair> pairs, double a) {
    if (!(a > 0)) throw ConfigError("fit_maxpool_channel: split threshold a must be > 0");
    MaxPoolChannelParams p;
    p.a = a;
    std::vector<double> low_y, hx, hy;
    for (const auto& pr : pairs) {
        if (pr.x < a) {
            low_y.push_back(pr.y);
        } else {
            hx.push_back(pr.x);
            hy.push_back(pr.y);
        }
    }
    p.low_count = low_y.size();
    p.high_count = hx.size();
    if (low_y.size() >= kMinPairsPerBranch) {
        p.low_fit = true;
        p.mu0 = mean_of(low_y);
        p.sigma0 = std_of(low_y, p.mu0);
    }
    if (hx.size() < kMinPairsPerBranch) return p;

    const std::size_t n = hx.size();
    double scale = 0.0;
    for (double y : hy) scale += std::abs(y);
    scale /= static_cast<double>(n);
    const double sigma_floor = 1e-12 + 1e-9 * scale;

    std::vector<double> absres(n);
    for (std::size_t i = 0; i < n; ++i) absres[i] = std::abs(hy[i] - hx[i]);
    auto mid = absres.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(absres.begin(), mid, absres.end());

    double pi0 = 0.5;
    double s1 = std::max(*mid, sigma_floor);
    double mu2 = mean_of(hy);
    double s2 = std::max(std_of(hy, mu2), sigma_floor);

    std::vector<double> r1(n);
    double prev_ll = -std::numeric_limits<double>::infinity();
    double ll = prev_ll;
    std::size_t it = 0;
    while (it < kMaxEmIterations) {
        ++it;
        // E-step in the log domain.
        ll = 0.0;
        const double lp0 = std::log(std::max(pi0, 1e-300));
        const double lp1 = std::log(std::max(1.0 - pi0, 1e-300));
        for (std::size_t i = 0; i < n; ++i) {
            const double a1 = lp0 + log_normal_pdf(hy[i], hx[i], s1);
            const double a2 = lp1 + log_normal_pdf(hy[i], mu2, s2);
            const double m = std::max(a1, a2);
            const double lse = m + std::log(std::exp(a1 - m) + std::exp(a2 - m));
            r1[i] = std::exp(a1 - lse);
            ll += lse;
        }
        // M-step.
        double w1 = 0.0, w2 = 0.0, ss1 = 0.0, sy2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w1 += r1[i];
            w2 += 1.0 - r1[i];
            ss1 += r1[i] * (hy[i] - hx[i]) * (hy[i] - hx[i]);
            sy2 += (1.0 - r1[i]) * hy[i];
        }
        pi0 = w1 / static_cast<double>(n);
        if (w1 > 1e-12) s1 = std::max(std::sqrt(ss1 / w1), sigma_floor);
        if (w2 > 1e-12) {
            mu2 = sy2 / w2;
            double ss2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) ss2 += (1.0 - r1[i]) * (hy[i] - mu2) * (hy[i] - mu2);
            s2 = std::max(std::sqrt(ss2 / w2), sigma_floor);
        }
        if (std::abs(ll - prev_ll) < kEmTolerance) break;
        prev_ll = ll;
    }
    p.high_fit = true;
    p.pi0 = pi0;
    p.sigma1 = s1;
    p.mu2 = mu2;
    p.sigma2 = s2;
    p.em_iterations = it;
    p.log_likelihood = ll;
    return p;
}

double sample_maxpool_channel(double x, const MaxPoolChannelParams& p, std::mt19937_64& rng) {
    if (x < p.a) {
        if (!p.low_fit) throw UnfitBranchError("max-pool channel: x < a branch was not fitted");
        return std::max(0.0, gaussian_draw(p.mu0, p.sigma0, rng));
    }
    if (!p.high_fit) throw UnfitBranchError("max-pool channel: x >= a branch was not fitted");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double y = u(rng) < p.pi0 ? gaussian_draw(x, p.sigma1, rng) : gaussian_draw(p.mu2, p.sigma2, rng);
    return std::max(0.0, y);
}

std::vector<SmpPair> elementwise_pairs(const SmpMap& in, const SmpMap& out) {
    if (in.channels != out.channels || in.rows != out.rows || in.cols != out.cols)
        throw ShapeError("elementwise_pairs: SMP map dims differ");
    std::vector<SmpPair> pairs(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) pairs[i] = {in.values[i], out.values[i]};
    return pairs;
}

namespace {
double window_max(const SmpMap& in, std::size_t c, std::size_t r, std::size_t q, std::size_t k, std::size_t s) {
    double m = in.at(c, r * s, q * s);
    for (std::size_t dy = 0; dy < k; ++dy)
        for (std::size_t dx = 0; dx < k; ++dx) m = std::max(m, in.at(c, r * s + dy, q * s + dx));
    return m;
}
} // namespace

std::vector<SmpPair> window_max_pairs(const SmpMap& in, const SmpMap& out, std::size_t k, std::size_t s) {
    if (in.channels != out.channels || in.rows < k || in.cols < k || (in.rows - k) / s + 1 != out.rows ||
        (in.cols - k) / s + 1 != out.cols)
        throw ShapeError("window_max_pairs: pooled dims do not match input dims");
    std::vector<SmpPair> pairs;
    pairs.reserve(out.size());
    for (std::size_t c = 0; c < out.channels; ++c)
        for (std::size_t r = 0; r < out.rows; ++r)
            for (std::size_t q = 0; q < out.cols; ++q) pairs.push_back({window_max(in, c, r, q, k, s), out.at(c, r, q)});
    return pairs;
}

std::vector<double> monte_carlo_pipeline(const SmpMap& input, const PipelineStages& stages, std::size_t trials,
                                         std::uint64_t seed) {
    SmpMap conv = predict_conv_smp(input, stages.conv);
    for (double& v : conv.values) v = std::max(0.0, stages.calibration.slope * v + stages.calibration.intercept);
    const std::size_t k = stages.pool_kernel, s = stages.pool_stride;
    if (k == 0 || s == 0 || conv.rows < k || conv.cols < k || (conv.rows - k) % s != 0 || (conv.cols - k) % s != 0)
        throw ShapeError("monte_carlo_pipeline: pool window does not tile the conv output " +
                         std::to_string(conv.rows) + "x" + std::to_string(conv.cols));
    const std::size_t out_rows = (conv.rows - k) / s + 1, out_cols = (conv.cols - k) / s + 1;
    const std::size_t per_trial = conv.channels * out_rows * out_cols;
    std::vector<double> samples(per_trial * trials);
    SmpMap relu = conv;
    for (std::size_t t = 0; t < trials; ++t) {
        std::mt19937_64 rng(derive_seed(seed, {t}));
        for (std::size_t i = 0; i < conv.size(); ++i) relu.values[i] = sample_relu_channel(conv.values[i], stages.relu, rng);
        std::size_t o = t * per_trial;
        for (std::size_t c = 0; c < conv.channels; ++c)
            for (std::size_t r = 0; r < out_rows; ++r)
                for (std::size_t q = 0; q < out_cols; ++q)
                    samples[o++] = sample_maxpool_channel(window_max(relu, c, r, q, k, s), stages.pool, rng);
    }
    return samples;
}

RegressionResult linreg_r2(std::span<const double> pred, std::span<const double> real) {
    if (pred.size() != real.size()) throw ShapeError("linreg_r2: length mismatch");
    if (pred.size() < 3) throw ShapeError("linreg_r2: need at least 3 points");
    const double mx = mean_of(pred), my = mean_of(real);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        sxx += (pred[i] - mx) * (pred[i] - mx);
        sxy += (pred[i] - mx) * (real[i] - my);
        syy += (real[i] - my) * (real[i] - my);
    }
    if (sxx <= 0.0) throw NumericError("linreg_r2: constant predictor");
    RegressionResult r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double ssres = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = real[i] - (r.intercept + r.slope * pred[i]);
        ssres += e * e;
    }
    r.r2 = syy > 0.0 ? 1.0 - ssres / syy : 1.0;
    return r;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw ShapeError("pearson: length mismatch");
    if (xs.size() < 3) throw ShapeError("pearson: need at least 3 points");
    const double mx = mean_of(xs), my = mean_of(ys);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) throw NumericError("pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ShapeError("wasserstein1: empty sample set");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    // Walk both quantile functions over the merged set of probability breakpoints.
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double u = 0.0, total = 0.0;
    while (i < x.size() && j < y.size()) {
        const double ux = static_cast<double>(i + 1) / nx;
        const double uy = static_cast<double>(j + 1) / ny;
        const double next = std::min(ux, uy);
        total += (next - u) * std::abs(x[i] - y[j]);
        u = next;
        if (ux <= next) ++i;
        if (uy <= next) ++j;
    }
    return total;
}

std::vector<SmpPair> weight_input_pairs(const Layer& layer, const SmpMap& input) {
    const auto& s = layer.spec;
    if (!s.parametric()) throw ShapeError("weight_input_pairs: layer has no kernel");
    if (input.channels != s.in_channels) throw ShapeError("weight_input_pairs: channel mismatch");
    const Shape4 out = s.output_shape({1, input.channels, input.rows, input.cols});
    const long k = static_cast<long>(s.kernel), st = static_cast<long>(s.stride), p = static_cast<long>(s.padding);
    std::vector<SmpPair> pairs;
    for (std::size_t co = 0; co < out.c; ++co)
        for (std::size_t ci = 0; ci < input.channels; ++ci)
            for (long ky = 0; ky < k; ++ky)
                for (long kx = 0; kx < k; ++kx) {
                    const double w = s.kind == LayerKind::conv ? layer.weight.at(co, ci, ky, kx)
                                                               : layer.weight.at(ci, co, ky, kx);
                    if (s.kind == LayerKind::conv) {
                        for (long m = 0; m < static_cast<long>(out.h); ++m)
                            for (long n = 0; n < static_cast<long>(out.w); ++n) {
                                const long u = m * st - p + ky, v = n * st - p + kx;
                                if (u < 0 || v < 0 || u >= static_cast<long>(input.rows) || v >= static_cast<long>(input.cols))
                                    continue;
                                pairs.push_back({std::abs(w), input.at(ci, u, v)});
                            }
                    } else {
                        for (long u = 0; u < static_cast<long>(input.rows); ++u)
                            for (long v = 0; v < static_cast<long>(input.cols); ++v) {
                                const long m = u * st - p + ky, n = v * st - p + kx;
                                if (m < 0 || n < 0 || m >= static_cast<long>(out.h) || n >= static_cast<long>(out.w))
                                    continue;
                                pairs.push_back({std::abs(w), input.at(ci, u, v)});
                            }
                    }
                }
    return pairs;
}

void save_channel_params(const std::filesystem::path& path, const ChannelParamsFile& p) {
    std::ofstream os(path);
    if (!os) throw MissingInputError("cannot write " + path.string());
    os << std::setprecision(17);
    os << "# nslab channel parameters\n";
    os << "version=" << ChannelParamsFile::version << "\n";
    os << "conv.w0=" << p.w0 << "\nconv.slope=" << p.conv.slope << "\nconv.intercept=" << p.conv.intercept << "\n";
    os << "relu.theta=" << p.relu.theta << "\nrelu.sigma=" << p.relu.sigma << "\nrelu.eps_zero=" << p.relu.eps_zero
       << "\n";
    const auto& m = p.pool;
    os << "maxpool.a=" << m.a << "\nmaxpool.low_fit=" << m.low_fit << "\nmaxpool.mu0=" << m.mu0
       << "\nmaxpool.sigma0=" << m.sigma0 << "\nmaxpool.high_fit=" << m.high_fit << "\nmaxpool.pi0=" << m.pi0
       << "\nmaxpool.sigma1=" << m.sigma1 << "\nmaxpool.mu2=" << m.mu2 << "\nmaxpool.sigma2=" << m.sigma2
       << "\nmaxpool.low_count=" << m.low_count << "\nmaxpool.high_count=" << m.high_count
       << "\nmaxpool.em_iterations=" << m.em_iterations << "\n";
}

ChannelParamsFile load_channel_params(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingInputError("cannot open channel params " + path.string());
    std::map<std::string, std::string> kv;
    for (std::string line; std::getline(is, line);) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("channel params: malformed line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string& k) -> const std::string& {
        auto it = kv.find(k);
        if (it == kv.end()) throw FormatError("channel params: missing key '" + k + "'");
        return it->second;
    };
    if (std::stoi(get("version")) != ChannelParamsFile::version) throw FormatError("channel params: unsupported version");
    ChannelParamsFile p;
    p.w0 = std::stod(get("conv.w0"));
    p.conv.slope = std::stod(get("conv.slope"));
    p.conv.intercept = std::stod(get("conv.intercept"));
    p.relu.theta = std::stod(get("relu.theta"));
    p.relu.sigma = std::stod(get("relu.sigma"));
    p.relu.eps_zero = std::stod(get("relu.eps_zero"));
    auto& m = p.pool;
    m.a = std::stod(get("maxpool.a"));
    m.low_fit = get("maxpool.low_fit") == "1";
    m.mu0 = std::stod(get("maxpool.mu0"));
    m.sigma0 = std::stod(get("maxpool.sigma0"));
    m.high_fit = get("maxpool.high_fit") == "1";
    m.pi0 = std::stod(get("maxpool.pi0"));
    m.sigma1 = std::stod(get("maxpool.sigma1"));
    m.mu2 = std::stod(get("maxpool.mu2"));
    m.sigma2 = std::stod(get("maxpool.sigma2"));
    m.low_count = std::stoul(get("maxpool.low_count"));
    m.high_count = std::stoul(get("maxpool.high_count"));
    m.em_iterations = std::stoul(get("maxpool.em_iterations"));
    return p;
}

} // namespace nslab
