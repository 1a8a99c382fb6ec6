#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace negtune {

struct PngImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb; // interleaved, 3 bytes per pixel
};

// 8-bit RGB PNG reader/writer. Accepts grayscale, palette-less RGB and RGBA
// sources (alpha dropped, gray replicated); rejects 16-bit and interlaced
// files. Deflate is delegated to zlib.
PngImage read_png(const std::string& path);
void write_png(const std::string& path, const PngImage& img);

} // namespace negtune
