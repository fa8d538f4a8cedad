#include "nslab/tensor.hpp"

#include "nslab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace nslab {

std::string Shape4::str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) +
           ")";
}

Tensor4::Tensor4(Shape4 shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor4::Tensor4(Shape4 shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size())
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_.str());
}

Tensor4 Tensor4::sample(std::size_t n) const {
    Shape4 s{1, shape_.c, shape_.h, shape_.w};
    const std::size_t stride = s.size();
    std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(n * stride),
                            data_.begin() + static_cast<std::ptrdiff_t>((n + 1) * stride));
    return Tensor4(s, std::move(out));
}

bool Tensor4::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace nslab
