#pragma once

#include "nslab/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace nslab {

/// Single-channel image, row-major.
struct Image {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> px;

    Image() = default;
    Image(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), px(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return px[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return px[r * cols + c]; }
    bool operator==(const Image&) const = default;
};

using ImageSet = std::vector<Image>;

/// Stacks images[indices] into a (batch, 1, rows, cols) tensor.
Tensor4 to_batch(const ImageSet& images, std::span<const std::size_t> indices);
Tensor4 to_tensor(const Image& img);
Image to_image(const Tensor4& t, std::size_t n = 0, std::size_t c = 0);

} // namespace nslab
