#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace nslab {

/// NCHW dimensions.
struct Shape4 {
    std::size_t n = 0, c = 0, h = 0, w = 0;

    std::size_t size() const { return n * c * h * w; }
    std::size_t plane() const { return h * w; }
    bool operator==(const Shape4&) const = default;
    std::string str() const;
};

/// Dense rank-4 array of doubles, row-major NCHW.
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(Shape4 shape, double fill = 0.0);
    Tensor4(Shape4 shape, std::vector<double> data);

    const Shape4& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
        return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }
    double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* plane(std::size_t n, std::size_t c) { return data_.data() + (n * shape_.c + c) * shape_.plane(); }
    const double* plane(std::size_t n, std::size_t c) const {
        return data_.data() + (n * shape_.c + c) * shape_.plane();
    }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    /// Copy of sample `n` as a batch of one.
    Tensor4 sample(std::size_t n) const;

    bool all_finite() const;

private:
    Shape4 shape_;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);

} // namespace nslab
