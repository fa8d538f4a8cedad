#pragma once

#include "nslab/image.hpp"
#include "nslab/network.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace nslab {

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    Setup setup = Setup::relu_maxpool;
};

struct EpochRecord {
    std::uint32_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    bool operator==(const EpochRecord&) const = default;
};

struct Checkpoint {
    static constexpr std::uint16_t format_version = 1;

    Network net;
    std::uint64_t seed = 0;
    std::uint32_t epoch = 0; // epoch that produced the kept parameters (1-based)
    double val_loss = 0.0;
    std::vector<EpochRecord> history;
};

class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& what, std::size_t epoch)
        : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mean MSE of the network over a whole image set.
double evaluate_mse(const Network& net, const ImageSet& images, std::size_t batch_size = 64);

/// Trains the default autoencoder with Adam on MSE and keeps the parameters
/// of the epoch with the lowest validation MSE. Bit-reproducible for a given
/// (train, val, config, seed).
Checkpoint train_autoencoder(const ImageSet& train, const ImageSet& val, const TrainConfig& config,
                             std::uint64_t seed, const EpochCallback& on_epoch = {});

/// Same loop over a caller-built network (used for small test networks).
Checkpoint train_network(Network net, const ImageSet& train, const ImageSet& val, const TrainConfig& config,
                         std::uint64_t seed, const EpochCallback& on_epoch = {});

// Binary checkpoint file: magic "NSMN", u16 version, network descriptor,
// training metadata, then little-endian f64 parameter arrays.
void write_checkpoint(std::ostream& os, const Checkpoint& ck);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace nslab
