#include "image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "png_io.hpp"
#include "rng.hpp"

namespace negtune {

ImageBatch::ImageBatch(Tensor t, int bit_depth) : data(std::move(t)), bit_depth_src(bit_depth) {
    validate();
}

void ImageBatch::validate() const {
    if (data.c != 3) throw std::invalid_argument("ImageBatch: channel count must be 3");
    if (data.n < 1 || data.h < 1 || data.w < 1)
        throw std::invalid_argument("ImageBatch: empty tensor");
    for (double v : data.data)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("ImageBatch: values must lie in [0,1]");
}

ImageBatch load_image(const std::string& path) {
    PngImage png = read_png(path);
    Tensor t(1, 3, png.height, png.width);
    const size_t hw = static_cast<size_t>(png.height) * png.width;
    for (size_t i = 0; i < hw; ++i)
        for (int q = 0; q < 3; ++q)
            t.data[q * hw + i] = png.rgb[i * 3 + q] / 255.0;
    return ImageBatch(std::move(t));
}

void save_image(const std::string& path, const ImageBatch& img, int batch_index) {
    if (batch_index < 0 || batch_index >= img.batch())
        throw std::invalid_argument("save_image: batch index out of range");
    PngImage png;
    png.width = img.width();
    png.height = img.height();
    png.rgb.resize(static_cast<size_t>(png.width) * png.height * 3);
    const size_t hw = static_cast<size_t>(png.height) * png.width;
    const double* base = &img.data.data[static_cast<size_t>(batch_index) * 3 * hw];
    for (size_t i = 0; i < hw; ++i)
        for (int q = 0; q < 3; ++q) {
            double v = std::clamp(base[q * hw + i], 0.0, 1.0);
            png.rgb[i * 3 + q] = static_cast<uint8_t>(std::lround(v * 255.0));
        }
    write_png(path, png);
}

ImageBatch random_crop(const ImageBatch& img, int size, uint64_t seed) {
    if (img.height() < size || img.width() < size)
        throw std::invalid_argument("random_crop: image too small");
    auto rng = make_rng(seed, 0, RngPurpose::crop);
    const int max_top = img.height() - size;
    const int max_left = img.width() - size;
    std::uniform_int_distribution<int> dt(0, max_top), dl(0, max_left);
    const int top = dt(rng), left = dl(rng);
    ImageBatch out;
    out.data = crop(img.data, top, left, size, size);
    out.bit_depth_src = img.bit_depth_src;
    return out;
}

YuvImage rgb_to_yuv(const ImageBatch& img, int batch_index) {
    if (batch_index < 0 || batch_index >= img.batch())
        throw std::invalid_argument("rgb_to_yuv: batch index out of range");
    const int H = img.height(), W = img.width();
    YuvImage out;
    out.y = Tensor::plane(H, W);
    out.u = Tensor::plane(H, W);
    out.v = Tensor::plane(H, W);
    const size_t hw = static_cast<size_t>(H) * W;
    const double* base = &img.data.data[static_cast<size_t>(batch_index) * 3 * hw];
    for (size_t i = 0; i < hw; ++i) {
        const double r = base[i], g = base[hw + i], b = base[2 * hw + i];
        const double y = 0.299 * r + 0.587 * g + 0.114 * b;
        out.y.data[i] = std::clamp(y, 0.0, 1.0);
        out.u.data[i] = std::clamp((b - y) / 1.772 + 0.5, 0.0, 1.0);
        out.v.data[i] = std::clamp((r - y) / 1.402 + 0.5, 0.0, 1.0);
    }
    return out;
}

ImageBatch yuv_to_rgb(const YuvImage& yuv) {
    if (!yuv.y.same_shape(yuv.u) || !yuv.y.same_shape(yuv.v))
        throw std::invalid_argument("yuv_to_rgb: plane shape mismatch");
    const int H = yuv.y.h, W = yuv.y.w;
    Tensor t(1, 3, H, W);
    const size_t hw = static_cast<size_t>(H) * W;
    for (size_t i = 0; i < hw; ++i) {
        const double y = yuv.y.data[i];
        const double b = y + 1.772 * (yuv.u.data[i] - 0.5);
        const double r = y + 1.402 * (yuv.v.data[i] - 0.5);
        const double g = (y - 0.299 * r - 0.114 * b) / 0.587;
        t.data[i] = std::clamp(r, 0.0, 1.0);
        t.data[hw + i] = std::clamp(g, 0.0, 1.0);
        t.data[2 * hw + i] = std::clamp(b, 0.0, 1.0);
    }
    return ImageBatch(std::move(t));
}

} // namespace negtune
