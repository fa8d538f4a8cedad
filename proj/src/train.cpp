#include "nslab/train.hpp"

#include "nslab/adam.hpp"
#include "nslab/binio.hpp"
#include "nslab/errors.hpp"
#include "nslab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace nslab {

double evaluate_mse(const Network& net, const ImageSet& images, std::size_t batch_size) {
    if (images.empty()) throw ShapeError("evaluate_mse: empty image set");
    std::vector<std::size_t> idx(images.size());
    std::iota(idx.begin(), idx.end(), 0);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < idx.size(); start += batch_size) {
        const std::size_t end = std::min(idx.size(), start + batch_size);
        std::span<const std::size_t> b(idx.data() + start, end - start);
        Tensor4 x = to_batch(images, b);
        Tensor4 y = forward(net, x);
        sum += mse(y, x) * static_cast<double>(y.size());
        count += y.size();
    }
    return sum / static_cast<double>(count);
}

Checkpoint train_network(Network net, const ImageSet& train, const ImageSet& val, const TrainConfig& config,
                         std::uint64_t seed, const EpochCallback& on_epoch) {
    if (train.empty() || val.empty()) throw ShapeError("train: empty dataset");
    if (config.batch_size == 0 || config.epochs == 0) throw ConfigError("train: epochs and batch size must be >= 1");

    std::mt19937_64 shuffle_rng(derive_seed(seed, {1}));
    auto params = net.parameters();
    AdamState adam(AdamHyper{config.lr}, params);

    Checkpoint best;
    best.seed = seed;
    best.val_loss = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::span<const std::size_t> b(order.data() + start, end - start);
            Tensor4 x = to_batch(train, b);
            Gradients g;
            try {
                g = backward_and_grads(net, x, x);
            } catch (const NumericError& e) {
                throw TrainingError(std::string("training diverged: ") + e.what(), epoch);
            }
            adam_step(params, g.params, adam);
            loss_sum += g.loss;
            ++batches;
        }
        EpochRecord rec{static_cast<std::uint32_t>(epoch), loss_sum / static_cast<double>(batches),
                        evaluate_mse(net, val, config.batch_size)};
        if (!std::isfinite(rec.val_loss) || !std::isfinite(rec.train_loss))
            throw TrainingError("training diverged: non-finite loss", epoch);
        best.history.push_back(rec);
        if (rec.val_loss < best.val_loss) {
            best.val_loss = rec.val_loss;
            best.epoch = rec.epoch;
            best.net = net;
        }
        if (on_epoch) on_epoch(rec);
    }
    return best;
}

Checkpoint train_autoencoder(const ImageSet& train, const ImageSet& val, const TrainConfig& config,
                             std::uint64_t seed, const EpochCallback& on_epoch) {
    if (train.empty() || val.empty()) throw ShapeError("train: empty dataset");
    if (train.front().rows != train.front().cols) throw ShapeError("train: images must be square");
    Network net = make_autoencoder(config.setup, train.front().rows);
    initialize(net, derive_seed(seed, {0}));
    return train_network(std::move(net), train, val, config, seed, on_epoch);
}

namespace {
constexpr char kMagic[4] = {'N', 'S', 'M', 'N'};
}

void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
    using namespace binio;
    os.write(kMagic, 4);
    put_le<std::uint16_t>(os, Checkpoint::format_version);
    const Network& net = ck.net;
    put_le<std::uint8_t>(os, static_cast<std::uint8_t>(net.setup));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.input_shape.c));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.input_shape.h));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.input_shape.w));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& l : net.layers) {
        const auto& s = l.spec;
        put_le<std::uint8_t>(os, static_cast<std::uint8_t>(s.kind));
        for (std::size_t v : {s.kernel, s.stride, s.padding, s.output_padding, s.in_channels, s.out_channels})
            put_le<std::uint32_t>(os, static_cast<std::uint32_t>(v));
        put_le<std::uint8_t>(os, static_cast<std::uint8_t>(s.activation));
        put_le<std::uint8_t>(os, static_cast<std::uint8_t>(s.pool));
    }
    put_le<std::uint64_t>(os, ck.seed);
    put_le<std::uint32_t>(os, ck.epoch);
    put_f64(os, ck.val_loss);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ck.history.size()));
    for (const auto& h : ck.history) {
        put_le<std::uint32_t>(os, h.epoch);
        put_f64(os, h.train_loss);
        put_f64(os, h.val_loss);
    }
    for (auto p : net.parameters()) {
        put_le<std::uint64_t>(os, p.size());
        put_f64s(os, p);
    }
}

Checkpoint read_checkpoint(std::istream& is) {
    binio::Reader r(is, "checkpoint");
    char magic[4];
    r.bytes(magic, 4);
    if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("checkpoint: bad magic", 0);
    const auto version = r.le<std::uint16_t>();
    if (version != Checkpoint::format_version)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version), 4);

    Checkpoint ck;
    Network& net = ck.net;
    const auto setup = r.le<std::uint8_t>();
    if (setup > 1) throw FormatError("checkpoint: bad setup tag", r.offset() - 1);
    net.setup = static_cast<Setup>(setup);
    net.input_shape.n = 1;
    net.input_shape.c = r.le<std::uint32_t>();
    net.input_shape.h = r.le<std::uint32_t>();
    net.input_shape.w = r.le<std::uint32_t>();
    const auto nlayers = r.le<std::uint32_t>();
    if (nlayers > 4096) throw FormatError("checkpoint: implausible layer count", r.offset() - 4);
    for (std::uint32_t i = 0; i < nlayers; ++i) {
        LayerSpec s;
        const auto kind = r.le<std::uint8_t>();
        if (kind > 3) throw FormatError("checkpoint: bad layer kind", r.offset() - 1);
        s.kind = static_cast<LayerKind>(kind);
        s.kernel = r.le<std::uint32_t>();
        s.stride = r.le<std::uint32_t>();
        s.padding = r.le<std::uint32_t>();
        s.output_padding = r.le<std::uint32_t>();
        s.in_channels = r.le<std::uint32_t>();
        s.out_channels = r.le<std::uint32_t>();
        const auto act = r.le<std::uint8_t>();
        const auto pool = r.le<std::uint8_t>();
        if (act > 2 || pool > 1) throw FormatError("checkpoint: bad activation/pool tag", r.offset() - 2);
        s.activation = static_cast<ActivationKind>(act);
        s.pool = static_cast<PoolKind>(pool);
        Layer l{s, {}, {}};
        if (s.parametric()) {
            l.weight = Tensor4(s.kernel_shape());
            l.bias.assign(s.out_channels, 0.0);
        }
        net.layers.push_back(std::move(l));
    }
    ck.seed = r.le<std::uint64_t>();
    ck.epoch = r.le<std::uint32_t>();
    ck.val_loss = r.f64();
    const auto nhist = r.le<std::uint32_t>();
    for (std::uint32_t i = 0; i < nhist; ++i) {
        EpochRecord h;
        h.epoch = r.le<std::uint32_t>();
        h.train_loss = r.f64();
        h.val_loss = r.f64();
        ck.history.push_back(h);
    }
    for (auto p : net.parameters()) {
        const auto at = r.offset();
        const auto n = r.le<std::uint64_t>();
        if (n != p.size())
            throw FormatError("checkpoint: parameter array length " + std::to_string(n) + ", expected " +
                                  std::to_string(p.size()),
                              at);
        auto vals = r.f64s(n);
        std::copy(vals.begin(), vals.end(), p.begin());
    }
    try {
        net.boundary_shapes();
    } catch (const ShapeError& e) {
        throw FormatError(std::string("checkpoint: inconsistent network: ") + e.what());
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw MissingInputError("cannot write " + path.string());
    write_checkpoint(os, ck);
    if (!os) throw MissingInputError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingInputError("cannot open checkpoint " + path.string());
    return read_checkpoint(is);
}

} // namespace nslab
