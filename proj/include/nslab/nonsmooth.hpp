#pragma once

// Discrete nonsmoothness statistics for uniformly sampled series.
//
// A nonsmooth point shows up as a large |f(t+d) + f(t-d) - 2 f(t)|. A *peak*
// is a |second difference| value strictly greater than ten times both the
// mean and the median of its series; SMP is the sum of peak magnitudes.

#include "nslab/synthgen.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace nslab {

constexpr double kDefaultDetectionThreshold = 0.02;
constexpr double kPeakFactor = 10.0;

/// Signed second-order difference at interior indices; result[i] is centered
/// on series[i + 1]. Throws ShapeError if fewer than 3 samples.
std::vector<double> second_order_difference(std::span<const double> series);

/// Interior indices t (into the original series) with |second difference| > tau.
std::vector<std::size_t> detect_nonsmooth(std::span<const double> series, double tau = kDefaultDetectionThreshold);

struct PeakSet {
    std::vector<std::size_t> indices; // into the |second difference| series, increasing
    std::vector<double> magnitudes;
};

PeakSet find_peaks(std::span<const double> abs_d2);

/// Sum of peak magnitudes of the |second difference| of a raw series.
double smp(std::span<const double> series);

/// Mean |second difference| over every pixel and interior frame.
double ave_nonsmooth(const VideoSequence& video);

/// Per-pixel mean |second difference| (row-major, rows x cols).
std::vector<double> pixel_ave_nonsmooth(const VideoSequence& video);

} // namespace nslab
