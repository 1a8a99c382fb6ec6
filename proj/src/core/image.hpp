#pragma once

#include <cstdint>
#include <string>

#include "tensor.hpp"

namespace negtune {

// Metric evaluation needs at least this many pixels per side: 5-scale
// structural similarity plus the 4-scale information-fidelity pyramid bottom
// out around 160 px, 192 leaves margin.
constexpr int kMinMetricSide = 192;
constexpr int kTrainCropSide = 256;

// Float RGB batch in [0,1], channel order R,G,B.
struct ImageBatch {
    Tensor data; // (N,3,H,W)
    int bit_depth_src = 8;

    ImageBatch() = default;
    explicit ImageBatch(Tensor t, int bit_depth = 8);

    int batch() const { return data.n; }
    int height() const { return data.h; }
    int width() const { return data.w; }
    void validate() const; // throws on range/channel violations
};

// Full-resolution 4:4:4 planes in [0,1].
struct YuvImage {
    Tensor y, u, v; // each (1,1,H,W)
};

ImageBatch load_image(const std::string& path);
void save_image(const std::string& path, const ImageBatch& img, int batch_index = 0);

ImageBatch random_crop(const ImageBatch& img, int size, uint64_t seed);

// Full-range BT.601: Y = 0.299R + 0.587G + 0.114B, Cb = (B-Y)/1.772 + 0.5,
// Cr = (R-Y)/1.402 + 0.5. Outputs clamped to [0,1].
YuvImage rgb_to_yuv(const ImageBatch& img, int batch_index = 0);
ImageBatch yuv_to_rgb(const YuvImage& yuv);

} // namespace negtune
