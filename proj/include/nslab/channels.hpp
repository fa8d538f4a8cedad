#pragma once

/*
 * Propagation models for nonsmoothness events (SMP values) through network
 * building blocks.
 *
 *  - Conv / transpose conv: output SMP is the |W|-weighted sum of input SMPs
 *    over the receptive field and all input channels. In expected mode every
 *    |W| is replaced by w0 = mean |W|.
 *  - ReLU: Bernoulli-Gaussian channel
 *        f(y|x) = (1 - theta) delta(y) + theta N(y; x, sigma).
 *  - Max pool (x is the window maximum of input SMPs):
 *        f(y|x) = 1(x < a) N(y; mu0, sigma0)
 *               + 1(x >= a) [pi0 N(y; x, sigma1) + (1 - pi0) N(y; mu2, sigma2)].
 *
 * Sampled SMPs are clamped at 0.
 */

#include "nslab/network.hpp"
#include "nslab/probe.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

namespace nslab {

enum class WeightMode { expected, actual };
std::string to_string(WeightMode m);

struct ConvChannelModel {
    LayerSpec layer;                    // conv or transpose_conv geometry
    WeightMode mode = WeightMode::actual;
    double w0 = 0.0;                    // expected mode
    Tensor4 abs_weights;                // actual mode, layer kernel shape

    /// Model for a trained layer; w0 is estimated from its kernel either way.
    static ConvChannelModel from_layer(const Layer& layer, WeightMode mode);
    void validate() const;
};

/// Mean |W| over all kernel entries.
double estimate_w0(const Tensor4& kernel);

SmpMap predict_conv_smp(const SmpMap& input, const ConvChannelModel& model);

struct SmpPair {
    double x = 0.0;
    double y = 0.0;
};

struct ReluChannelParams {
    double theta = 1.0;
    double sigma = 0.0;
    double eps_zero = 0.0;
};

constexpr double kRelativeZeroTolerance = 1e-6;
constexpr std::size_t kMinPairsPerBranch = 10;

/// theta = share of pairs with y > eps_zero; sigma = RMS of (y - x) over that
/// share (0 when empty).
ReluChannelParams fit_relu_channel(std::span<const SmpPair> pairs, double eps_zero);
double sample_relu_channel(double x, const ReluChannelParams& p, std::mt19937_64& rng);

struct MaxPoolChannelParams {
    double a = 0.0025;
    bool low_fit = false;  // x < a branch
    double mu0 = 0.0, sigma0 = 0.0;
    bool high_fit = false; // x >= a branch
    double pi0 = 0.5, sigma1 = 0.0, mu2 = 0.0, sigma2 = 0.0;
    std::size_t em_iterations = 0;
    double log_likelihood = 0.0;
    std::size_t low_count = 0, high_count = 0;
};

constexpr double kDefaultMaxPoolSplit = 0.0025;
constexpr std::size_t kMaxEmIterations = 100;
constexpr double kEmTolerance = 1e-8;

/// Gaussian fit below the split; above it, EM over a two-component mixture
/// whose first component is centered on each sample's own x.
MaxPoolChannelParams fit_maxpool_channel(std::span<const SmpPair> pairs, double a = kDefaultMaxPoolSplit);

class UnfitBranchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double sample_maxpool_channel(double x, const MaxPoolChannelParams& p, std::mt19937_64& rng);

/// Pairs node SMPs across an elementwise layer (same dims).
std::vector<SmpPair> elementwise_pairs(const SmpMap& in, const SmpMap& out);
/// Pairs each pooled output SMP with the max input SMP of its window.
std::vector<SmpPair> window_max_pairs(const SmpMap& in, const SmpMap& out, std::size_t k = 2, std::size_t s = 2);

/// Fitted linear map from raw conv-model predictions to observed output SMPs.
struct ConvCalibration {
    double slope = 1.0;
    double intercept = 0.0;
};

struct PipelineStages {
    ConvChannelModel conv;
    ConvCalibration calibration; // applied to the conv prediction, result clamped at 0
    ReluChannelParams relu;
    std::size_t pool_kernel = 2;
    std::size_t pool_stride = 2;
    MaxPoolChannelParams pool;
};

/// Conv prediction (calibrated), then per-node ReLU channel draws, then per-window max and
/// max-pool channel draws. Returns every output-node sample, trial-major.
/// Trial i draws from a stream derived from (seed, i).
std::vector<double> monte_carlo_pipeline(const SmpMap& input, const PipelineStages& stages, std::size_t trials,
                                         std::uint64_t seed);

struct RegressionResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// OLS of real on pred.
RegressionResult linreg_r2(std::span<const double> pred, std::span<const double> real);
double pearson(std::span<const double> xs, std::span<const double> ys);
/// 1-D earth mover's distance between two empirical distributions.
double wasserstein1(std::span<const double> a, std::span<const double> b);

/// (|W|, input SMP) for every term of the conv sum behind each output node.
std::vector<SmpPair> weight_input_pairs(const Layer& layer, const SmpMap& input);

struct ChannelParamsFile {
    static constexpr int version = 1;
    double w0 = 0.0;
    ConvCalibration conv;
    ReluChannelParams relu;
    MaxPoolChannelParams pool;
};

void save_channel_params(const std::filesystem::path& path, const ChannelParamsFile& p);
ChannelParamsFile load_channel_params(const std::filesystem::path& path);

} // namespace nslab
