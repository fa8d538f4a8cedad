#pragma once

// Flat key=value experiment config with [section] headers. Keys are addressed
// as "section.key"; keys before any header live in the "experiment" section.

#include "nslab/network.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nslab {

std::map<std::string, std::string> parse_key_values(const std::string& text);

struct ExperimentConfig {
    // [experiment]
    std::string dataset = "ellipsoid"; // ellipsoid | mnist-rotation
    std::uint64_t seed = 1;
    std::filesystem::path out = "nslab_out";
    std::size_t jobs = 1;

    // [data]
    std::size_t train_count = 2000;
    std::size_t val_count = 500;
    std::size_t video_count = 20;
    double step = 0.1;          // light-path step of the test videos
    double channel_step = 0.05; // light-path step of the default (channel-modelling) video
    std::size_t resolution = 28;
    std::optional<std::filesystem::path> mnist_images;
    std::optional<std::filesystem::path> mnist_labels;
    int digit = 7;
    std::size_t templates = 50;            // procedural templates when no IDX file is given
    std::size_t angles_per_template = 40;  // 60 with --paper-scale
    std::size_t val_angles_per_template = 10;

    // [train]
    std::size_t realizations = 3;
    std::size_t epochs = 20;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    std::vector<Setup> setups{Setup::relu_maxpool, Setup::softplus_avepool};

    // [analysis]
    double tau_d = 0.02;
    double split_a = 0.0025;
    double eps_zero_rel = 1e-6;
    std::size_t mc_trials = 200;
    std::size_t hist_bins = 30;

    /// Full counts: 10000/1000 images, 100 videos, 10 realizations, 60 train and
    /// 60 validation angles per template.
    void apply_paper_scale();
    void validate() const;
    /// Canonical key=value rendering; hashed into report manifests.
    std::string canonical() const;
};

/// Parses config text; unknown keys are a ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view data);

} // namespace nslab
