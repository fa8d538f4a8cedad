#include "nslab/nonsmooth.hpp"

#include "nslab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nslab {

std::vector<double> second_order_difference(std::span<const double> series) {
    if (series.size() < 3)
        throw ShapeError("second_order_difference: need at least 3 samples, got " + std::to_string(series.size()));
    std::vector<double> d(series.size() - 2);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = series[i + 2] + series[i] - 2.0 * series[i + 1];
    return d;
}

std::vector<std::size_t> detect_nonsmooth(std::span<const double> series, double tau) {
    const auto d = second_order_difference(series);
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (std::abs(d[i]) > tau) hits.push_back(i + 1);
    return hits;
}

namespace {
double median(std::vector<double> v) {
    const std::size_t n = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}
} // namespace

PeakSet find_peaks(std::span<const double> abs_d2) {
    PeakSet p;
    if (abs_d2.empty()) return p;
    const double mean = std::accumulate(abs_d2.begin(), abs_d2.end(), 0.0) / static_cast<double>(abs_d2.size());
    if (mean == 0.0) return p;
    const double med = median({abs_d2.begin(), abs_d2.end()});
    const double bar = kPeakFactor * std::max(mean, med);
    for (std::size_t i = 0; i < abs_d2.size(); ++i)
        if (abs_d2[i] > bar) {
            p.indices.push_back(i);
            p.magnitudes.push_back(abs_d2[i]);
        }
    return p;
}

double smp(std::span<const double> series) {
    auto d = second_order_difference(series);
    for (auto& v : d) v = std::abs(v);
    const PeakSet p = find_peaks(d);
    return std::accumulate(p.magnitudes.begin(), p.magnitudes.end(), 0.0);
}

std::vector<double> pixel_ave_nonsmooth(const VideoSequence& video) {
    const std::size_t T = video.frames.size();
    if (T < 3) throw ShapeError("ave_nonsmooth: video needs at least 3 frames, got " + std::to_string(T));
    const std::size_t P = video.frames.front().px.size();
    std::vector<double> acc(P, 0.0);
    for (std::size_t t = 1; t + 1 < T; ++t) {
        const auto& a = video.frames[t - 1].px;
        const auto& b = video.frames[t].px;
        const auto& c = video.frames[t + 1].px;
        if (a.size() != P || b.size() != P || c.size() != P) throw ShapeError("ave_nonsmooth: mixed frame sizes");
        for (std::size_t i = 0; i < P; ++i) acc[i] += std::abs(c[i] + a[i] - 2.0 * b[i]);
    }
    for (auto& v : acc) v /= static_cast<double>(T - 2);
    return acc;
}

double ave_nonsmooth(const VideoSequence& video) {
    const auto per_pixel = pixel_ave_nonsmooth(video);
    return std::accumulate(per_pixel.begin(), per_pixel.end(), 0.0) / static_cast<double>(per_pixel.size());
}

} // namespace nslab
