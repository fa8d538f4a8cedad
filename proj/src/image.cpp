#include "nslab/image.hpp"

#include "nslab/errors.hpp"

#include <algorithm>

namespace nslab {

Tensor4 to_batch(const ImageSet& images, std::span<const std::size_t> indices) {
    if (indices.empty()) throw ShapeError("to_batch: empty batch");
    const Image& first = images.at(indices[0]);
    Tensor4 t(Shape4{indices.size(), 1, first.rows, first.cols});
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const Image& img = images.at(indices[b]);
        if (img.rows != first.rows || img.cols != first.cols) throw ShapeError("to_batch: mixed image sizes");
        std::copy(img.px.begin(), img.px.end(), t.plane(b, 0));
    }
    return t;
}

Tensor4 to_tensor(const Image& img) { return Tensor4(Shape4{1, 1, img.rows, img.cols}, img.px); }

Image to_image(const Tensor4& t, std::size_t n, std::size_t c) {
    Image img(t.shape().h, t.shape().w);
    const double* p = t.plane(n, c);
    std::copy(p, p + img.px.size(), img.px.begin());
    return img;
}

} // namespace nslab
