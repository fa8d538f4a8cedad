#pragma once

// Frame-by-frame activation tracing. Boundary i is the input of layer i;
// boundary L (layer count) is the network output.

#include "nslab/network.hpp"
#include "nslab/synthgen.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace nslab {

using BoundaryId = std::size_t;

struct NodeTrace {
    BoundaryId boundary = 0;
    std::size_t channel = 0, row = 0, col = 0;
    std::vector<double> series;
};

struct BoundaryTraces {
    BoundaryId boundary = 0;
    std::string producer;      // kind of the layer writing this boundary, "input" for 0
    Shape4 dims;               // n == 1
    std::size_t frames = 0;
    std::vector<double> data;  // node-major: data[node * frames + t]

    std::size_t node_count() const { return dims.c * dims.h * dims.w; }
    std::span<const double> series(std::size_t node) const { return {data.data() + node * frames, frames}; }
    std::span<const double> series(std::size_t c, std::size_t r, std::size_t col) const {
        return series((c * dims.h + r) * dims.w + col);
    }
    NodeTrace node(std::size_t c, std::size_t r, std::size_t col) const;
};

using LayerTraceSet = std::map<BoundaryId, BoundaryTraces>;

std::string boundary_producer(const Network& net, BoundaryId b);

/// Runs the network over every frame in order and records the selected
/// boundaries. An empty selection records every boundary.
LayerTraceSet trace_forward(const Network& net, const VideoSequence& video, std::vector<BoundaryId> boundaries = {});

/// Reconstructed video (output boundary reassembled into frames).
VideoSequence reconstruct_video(const Network& net, const VideoSequence& video);

/// SMP per node at one boundary, (c, h, w) row-major.
struct SmpMap {
    BoundaryId boundary = 0;
    std::size_t channels = 0, rows = 0, cols = 0;
    std::vector<double> values;

    double& at(std::size_t c, std::size_t r, std::size_t col) { return values[(c * rows + r) * cols + col]; }
    double at(std::size_t c, std::size_t r, std::size_t col) const { return values[(c * rows + r) * cols + col]; }
    std::size_t size() const { return values.size(); }
};

SmpMap boundary_smp_map(const BoundaryTraces& traces);
std::map<BoundaryId, SmpMap> layer_smp_map(const LayerTraceSet& traces);

/// Per-location mean across channels; returned as a one-channel map.
SmpMap channel_mean_smp(const SmpMap& smp);

// Trace store: manifest.txt plus boundary_<id>.f64 (node-major little-endian f64).
void save_trace_store(const std::filesystem::path& dir, const LayerTraceSet& traces);
LayerTraceSet load_trace_store(const std::filesystem::path& dir);

} // namespace nslab
