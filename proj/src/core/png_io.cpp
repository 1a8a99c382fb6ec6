#include "png_io.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace negtune {

namespace {

constexpr uint8_t kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

uint32_t be32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

std::vector<uint8_t> zlib_inflate(const uint8_t* data, size_t len, size_t expected) {
    std::vector<uint8_t> out(expected);
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw std::runtime_error("png: inflateInit failed");
    zs.next_in = const_cast<Bytef*>(data);
    zs.avail_in = static_cast<uInt>(len);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) throw std::runtime_error("png: corrupt deflate stream");
    if (zs.total_out != expected) throw std::runtime_error("png: truncated pixel data");
    return out;
}

std::vector<uint8_t> zlib_deflate(const std::vector<uint8_t>& data) {
    uLongf bound = compressBound(static_cast<uLong>(data.size()));
    std::vector<uint8_t> out(bound);
    if (compress2(out.data(), &bound, data.data(), static_cast<uLong>(data.size()), 6) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    out.resize(bound);
    return out;
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};

} // namespace

PngImage read_png(const std::string& path) {
    std::unique_ptr<FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("png: cannot open " + path);
    uint8_t sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || std::memcmp(sig, kPngSignature, 8) != 0)
        throw std::runtime_error("png: bad signature in " + path);

    int width = 0, height = 0, bit_depth = 0, color_type = 0;
    std::vector<uint8_t> idat;
    bool seen_ihdr = false, seen_iend = false;

    while (!seen_iend) {
        uint8_t hdr[8];
        if (std::fread(hdr, 1, 8, f.get()) != 8) throw std::runtime_error("png: truncated " + path);
        uint32_t len = be32(hdr);
        char type[5] = {char(hdr[4]), char(hdr[5]), char(hdr[6]), char(hdr[7]), 0};
        std::vector<uint8_t> payload(len);
        if (len && std::fread(payload.data(), 1, len, f.get()) != len)
            throw std::runtime_error("png: truncated chunk in " + path);
        uint8_t crc[4];
        if (std::fread(crc, 1, 4, f.get()) != 4) throw std::runtime_error("png: truncated crc");

        if (!std::strcmp(type, "IHDR")) {
            if (len != 13) throw std::runtime_error("png: bad IHDR");
            width = int(be32(&payload[0]));
            height = int(be32(&payload[4]));
            bit_depth = payload[8];
            color_type = payload[9];
            if (payload[12] != 0) throw std::runtime_error("png: interlaced files unsupported");
            if (bit_depth != 8) throw std::runtime_error("png: only 8-bit supported");
            if (color_type != 0 && color_type != 2 && color_type != 6)
                throw std::runtime_error("png: unsupported color type");
            seen_ihdr = true;
        } else if (!std::strcmp(type, "IDAT")) {
            idat.insert(idat.end(), payload.begin(), payload.end());
        } else if (!std::strcmp(type, "IEND")) {
            seen_iend = true;
        }
        // ancillary chunks ignored
    }
    if (!seen_ihdr || width <= 0 || height <= 0) throw std::runtime_error("png: missing IHDR");

    const int src_ch = color_type == 0 ? 1 : (color_type == 2 ? 3 : 4);
    const size_t stride = size_t(width) * src_ch;
    std::vector<uint8_t> raw = zlib_inflate(idat.data(), idat.size(), (stride + 1) * height);

    // undo per-row filters in place
    std::vector<uint8_t> pix(stride * height);
    for (int y = 0; y < height; ++y) {
        const uint8_t filter = raw[(stride + 1) * y];
        const uint8_t* src = &raw[(stride + 1) * y + 1];
        uint8_t* dst = &pix[stride * y];
        const uint8_t* up = y > 0 ? &pix[stride * (y - 1)] : nullptr;
        for (size_t x = 0; x < stride; ++x) {
            int a = x >= size_t(src_ch) ? dst[x - src_ch] : 0;
            int b = up ? up[x] : 0;
            int c = (up && x >= size_t(src_ch)) ? up[x - src_ch] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw std::runtime_error("png: bad filter type");
            }
            dst[x] = uint8_t(v);
        }
    }

    PngImage img;
    img.width = width;
    img.height = height;
    img.rgb.resize(size_t(width) * height * 3);
    for (size_t i = 0; i < size_t(width) * height; ++i) {
        const uint8_t* s = &pix[i * src_ch];
        uint8_t* d = &img.rgb[i * 3];
        if (src_ch == 1) {
            d[0] = d[1] = d[2] = s[0];
        } else {
            d[0] = s[0];
            d[1] = s[1];
            d[2] = s[2];
        }
    }
    return img;
}

void write_png(const std::string& path, const PngImage& img) {
    if (img.width <= 0 || img.height <= 0 || img.rgb.size() != size_t(img.width) * img.height * 3)
        throw std::runtime_error("png: inconsistent image buffer");

    const size_t stride = size_t(img.width) * 3;
    std::vector<uint8_t> raw((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw[(stride + 1) * y] = 0; // no per-row filter; zlib does the heavy lifting
        std::memcpy(&raw[(stride + 1) * y + 1], &img.rgb[stride * y], stride);
    }
    std::vector<uint8_t> compressed = zlib_deflate(raw);

    std::vector<uint8_t> out;
    out.insert(out.end(), kPngSignature, kPngSignature + 8);

    auto emit_chunk = [&out](const char* type, const std::vector<uint8_t>& payload) {
        put_be32(out, uint32_t(payload.size()));
        size_t start = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), payload.begin(), payload.end());
        uint32_t c = crc32(0L, Z_NULL, 0);
        c = crc32(c, &out[start], uInt(out.size() - start));
        put_be32(out, c);
    };

    std::vector<uint8_t> ihdr;
    put_be32(ihdr, uint32_t(img.width));
    put_be32(ihdr, uint32_t(img.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // no interlace
    emit_chunk("IHDR", ihdr);
    emit_chunk("IDAT", compressed);
    emit_chunk("IEND", {});

    std::unique_ptr<FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("png: cannot write " + path);
    if (std::fwrite(out.data(), 1, out.size(), f.get()) != out.size())
        throw std::runtime_error("png: short write to " + path);
}

} // namespace negtune
