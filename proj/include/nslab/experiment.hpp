#pragma once

// Experiment pipeline: dataset generation, training of realizations,
// AveNonSmooth analysis, channel fitting and prediction, and report bundling.
//
// Output layout under config.out:
//   data/train.nsis, data/val.nsis, data/videos/video_NNN/, data/videos/default/
//   checkpoints/<setup>_rNN.nsmn
//   traces/                 chain boundaries of the analysed video
//   reports/*.csv, reports/channels.params, reports/manifest.txt

#include "nslab/channels.hpp"
#include "nslab/config.hpp"
#include "nslab/probe.hpp"
#include "nslab/synthgen.hpp"
#include "nslab/train.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace nslab {

inline constexpr const char* kToolVersion = "nslab 1.0.0";

/// Runs fn(i) for i in [0, count) on up to `jobs` threads.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

// ---- data ----

struct Dataset {
    ImageSet train;
    ImageSet val;
    std::vector<VideoSequence> videos; // test videos
    VideoSequence default_video;       // the video used for channel modelling
};

Dataset build_dataset(const ExperimentConfig& cfg);
ImageSet dataset_templates(const ExperimentConfig& cfg);

// ---- training ----

std::uint64_t realization_seed(std::uint64_t master, Setup setup, std::size_t realization);
std::filesystem::path checkpoint_path(const ExperimentConfig& cfg, Setup setup, std::size_t realization);

/// Trains every (setup, realization) pair; result index = setup_index * R + r.
std::vector<Checkpoint> train_realizations(const ExperimentConfig& cfg, const ImageSet& train, const ImageSet& val);

// ---- AveNonSmooth ----

struct AveNonSmoothRow {
    std::string setup; // relu_maxpool | softplus_avepool | original
    long realization;  // -1 for originals
    std::size_t video;
    double value;
};

std::vector<AveNonSmoothRow> ave_nonsmooth_table(const std::vector<Checkpoint>& nets,
                                                 const std::vector<VideoSequence>& videos, std::size_t jobs);

// ---- channel modelling on one network and video ----

/// Layer indices of the modelled chain: the second conv, the activation and
/// pool that follow it, and every transpose conv.
struct ChainLayers {
    std::size_t conv = 0, act = 0, pool = 0;
    std::vector<std::size_t> tconvs;
};

ChainLayers locate_chain(const Network& net);

struct ConvFit {
    std::string layer; // conv2, tconv1, ...
    std::size_t layer_index = 0;
    WeightMode mode = WeightMode::actual;
    bool ok = false;
    std::string error;
    RegressionResult fit;
    std::vector<double> predicted; // channel-mean per output location
    std::vector<double> real;
    std::size_t rows = 0, cols = 0;
};

struct ChainOptions {
    double split_a = kDefaultMaxPoolSplit;
    double eps_zero_rel = kRelativeZeroTolerance;
    std::size_t mc_trials = 200;
    std::uint64_t seed = 1;
    WeightMode mc_mode = WeightMode::actual;
};

struct ChainAnalysis {
    ChainLayers layers;
    std::map<BoundaryId, SmpMap> smp;
    std::vector<ConvFit> conv_fits;
    double weight_pearson = 0.0;
    std::vector<SmpPair> relu_pairs;
    std::vector<SmpPair> pool_pairs;
    ChannelParamsFile params;
    std::vector<double> mc_samples;
    std::vector<double> real_output;
    double w1 = 0.0;
    double real_mean = 0.0;
};

/// Traces the video through the network, computes every boundary's SMP map,
/// conv/transpose-conv R^2 in both weight modes, the |W|-vs-input-SMP
/// correlation, fitted ReLU and max-pool channels (or `fixed` ones), and the
/// Monte Carlo prediction of the pooled output SMPs.
ChainAnalysis analyze_chain(const Network& net, const VideoSequence& video, const ChainOptions& opts,
                            const ChannelParamsFile* fixed = nullptr);

ChainOptions chain_options(const ExperimentConfig& cfg);

// ---- commands ----

int cmd_gen_data(const ExperimentConfig& cfg);
int cmd_train(const ExperimentConfig& cfg);
int cmd_analyze(const ExperimentConfig& cfg);
int cmd_fit_channels(const ExperimentConfig& cfg);
int cmd_predict(const ExperimentConfig& cfg);
int cmd_report(const ExperimentConfig& cfg);

/// Raised by report validation; names the offending file.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tables the report step expects, relative to reports/.
const std::vector<std::string>& report_tables();

/// Checks that every row of a CSV has the header's column count; returns the data row count.
std::size_t validate_csv(const std::filesystem::path& path);

} // namespace nslab
