#include "nslab/probe.hpp"

#include "nslab/binio.hpp"
#include "nslab/errors.hpp"
#include "nslab/nonsmooth.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace nslab {

namespace {
constexpr std::size_t kFrameBatch = 16;
}

NodeTrace BoundaryTraces::node(std::size_t c, std::size_t r, std::size_t col) const {
    auto s = series(c, r, col);
    return {boundary, c, r, col, {s.begin(), s.end()}};
}

std::string boundary_producer(const Network& net, BoundaryId b) {
    if (b == 0) return "input";
    const auto& s = net.layers.at(b - 1).spec;
    switch (s.kind) {
    case LayerKind::activation: return to_string(s.activation);
    case LayerKind::pool: return to_string(s.pool) + "_pool";
    default: return to_string(s.kind);
    }
}

LayerTraceSet trace_forward(const Network& net, const VideoSequence& video, std::vector<BoundaryId> boundaries) {
    const auto shapes = net.boundary_shapes();
    if (boundaries.empty())
        for (BoundaryId b = 0; b < shapes.size(); ++b) boundaries.push_back(b);
    const std::size_t T = video.frames.size();
    if (T == 0) throw ShapeError("trace_forward: empty video");
    if (video.rows() != net.input_shape.h || video.cols() != net.input_shape.w || net.input_shape.c != 1)
        throw ShapeError("trace_forward: frames " + std::to_string(video.rows()) + "x" + std::to_string(video.cols()) +
                         " do not match network input " + net.input_shape.str());

    LayerTraceSet out;
    for (BoundaryId b : boundaries) {
        if (b >= shapes.size()) throw ShapeError("trace_forward: unknown boundary " + std::to_string(b));
        BoundaryTraces bt;
        bt.boundary = b;
        bt.producer = boundary_producer(net, b);
        bt.dims = shapes[b];
        bt.frames = T;
        bt.data.assign(bt.node_count() * T, 0.0);
        out.emplace(b, std::move(bt));
    }

    std::vector<std::size_t> idx(T);
    for (std::size_t i = 0; i < T; ++i) idx[i] = i;
    for (std::size_t start = 0; start < T; start += kFrameBatch) {
        const std::size_t end = std::min(T, start + kFrameBatch);
        Tensor4 x = to_batch(video.frames, std::span<const std::size_t>(idx.data() + start, end - start));
        ForwardCache cache = forward_all(net, x);
        for (auto& [b, bt] : out) {
            const Tensor4& act = cache.boundaries[b];
            const std::size_t nodes = bt.node_count();
            for (std::size_t n = 0; n < end - start; ++n) {
                const double* p = act.plane(n, 0);
                for (std::size_t node = 0; node < nodes; ++node) bt.data[node * T + start + n] = p[node];
            }
        }
    }
    return out;
}

VideoSequence reconstruct_video(const Network& net, const VideoSequence& video) {
    const BoundaryId last = net.layers.size();
    auto traces = trace_forward(net, video, {last});
    const auto& bt = traces.at(last);
    VideoSequence out;
    out.delta = video.delta;
    out.frames.assign(video.frames.size(), Image(bt.dims.h, bt.dims.w));
    for (std::size_t node = 0; node < bt.node_count(); ++node)
        for (std::size_t t = 0; t < bt.frames; ++t) out.frames[t].px[node] = bt.data[node * bt.frames + t];
    return out;
}

SmpMap boundary_smp_map(const BoundaryTraces& traces) {
    if (traces.frames < 3) throw ShapeError("layer_smp_map: traces need at least 3 frames");
    SmpMap m{traces.boundary, traces.dims.c, traces.dims.h, traces.dims.w, {}};
    m.values.resize(traces.node_count());
    for (std::size_t node = 0; node < m.values.size(); ++node) m.values[node] = smp(traces.series(node));
    return m;
}

std::map<BoundaryId, SmpMap> layer_smp_map(const LayerTraceSet& traces) {
    std::map<BoundaryId, SmpMap> out;
    for (const auto& [b, bt] : traces) out.emplace(b, boundary_smp_map(bt));
    return out;
}

SmpMap channel_mean_smp(const SmpMap& smp) {
    if (smp.channels == 0) throw ShapeError("channel_mean_smp: no channels");
    SmpMap m{smp.boundary, 1, smp.rows, smp.cols, std::vector<double>(smp.rows * smp.cols, 0.0)};
    for (std::size_t c = 0; c < smp.channels; ++c)
        for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] += smp.values[c * m.values.size() + i];
    for (auto& v : m.values) v /= static_cast<double>(smp.channels);
    return m;
}

void save_trace_store(const std::filesystem::path& dir, const LayerTraceSet& traces) {
    std::filesystem::create_directories(dir);
    std::ofstream man(dir / "manifest.txt");
    if (!man) throw MissingInputError("cannot write trace manifest in " + dir.string());
    man << "version=1\n";
    for (const auto& [b, bt] : traces) {
        man << "boundary=" << b << " producer=" << bt.producer << " c=" << bt.dims.c << " h=" << bt.dims.h
            << " w=" << bt.dims.w << " frames=" << bt.frames << "\n";
        std::ofstream os(dir / ("boundary_" + std::to_string(b) + ".f64"), std::ios::binary);
        binio::put_f64s(os, bt.data);
    }
}

LayerTraceSet load_trace_store(const std::filesystem::path& dir) {
    std::ifstream man(dir / "manifest.txt");
    if (!man) throw MissingInputError("missing trace manifest in " + dir.string());
    LayerTraceSet out;
    std::string line;
    std::getline(man, line);
    if (line != "version=1") throw FormatError("trace store: unsupported manifest version");
    while (std::getline(man, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        BoundaryTraces bt;
        for (std::string tok; ls >> tok;) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw FormatError("trace store: bad manifest token '" + tok + "'");
            const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
            if (k == "boundary") bt.boundary = std::stoul(v);
            else if (k == "producer") bt.producer = v;
            else if (k == "c") bt.dims.c = std::stoul(v);
            else if (k == "h") bt.dims.h = std::stoul(v);
            else if (k == "w") bt.dims.w = std::stoul(v);
            else if (k == "frames") bt.frames = std::stoul(v);
        }
        bt.dims.n = 1;
        const auto path = dir / ("boundary_" + std::to_string(bt.boundary) + ".f64");
        std::ifstream is(path, std::ios::binary);
        if (!is) throw MissingInputError("missing trace block " + path.string());
        binio::Reader r(is, path.filename().string());
        bt.data = r.f64s(bt.node_count() * bt.frames);
        out.emplace(bt.boundary, std::move(bt));
    }
    return out;
}

} // namespace nslab
