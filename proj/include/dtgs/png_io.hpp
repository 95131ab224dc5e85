#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dtgs/image.hpp"
#include "dtgs/math.hpp"

namespace dtgs {
namespace detail {

inline void put_u32_be(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

inline std::uint32_t read_u32_be(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

inline void write_chunk(std::vector<unsigned char>& out, const char type[4],
                        const unsigned char* data, std::uint32_t len) {
    put_u32_be(out, len);
    const size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    if (len) out.insert(out.end(), data, data + len);
    const uLong crc = crc32(crc32(0L, nullptr, 0), out.data() + start, 4 + len);
    put_u32_be(out, static_cast<std::uint32_t>(crc));
}

inline unsigned char quantize8(double v) {
    const double c = clamp01(v);
    return static_cast<unsigned char>(c * 255.0 + 0.5);
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

// 8-bit, color type 0 (gray) or 2 (rgb), no interlace.
inline std::vector<unsigned char> encode_png(const unsigned char* pixels, int width, int height,
                                             int channels) {
    std::vector<unsigned char> raw;
    raw.reserve(static_cast<size_t>(height) * (1 + static_cast<size_t>(width) * channels));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);  // filter type: none
        raw.insert(raw.end(), pixels + static_cast<size_t>(y) * width * channels,
                   pixels + (static_cast<size_t>(y) + 1) * width * channels);
    }
    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw ValidationError("png encode: deflate failed");
    comp.resize(comp_len);

    std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    unsigned char ihdr[13];
    ihdr[0] = static_cast<unsigned char>(width >> 24);
    ihdr[1] = static_cast<unsigned char>(width >> 16);
    ihdr[2] = static_cast<unsigned char>(width >> 8);
    ihdr[3] = static_cast<unsigned char>(width);
    ihdr[4] = static_cast<unsigned char>(height >> 24);
    ihdr[5] = static_cast<unsigned char>(height >> 16);
    ihdr[6] = static_cast<unsigned char>(height >> 8);
    ihdr[7] = static_cast<unsigned char>(height);
    ihdr[8] = 8;                                         // bit depth
    ihdr[9] = channels == 1 ? 0 : 2;                     // color type
    ihdr[10] = ihdr[11] = ihdr[12] = 0;                  // compression/filter/interlace
    write_chunk(out, "IHDR", ihdr, 13);
    write_chunk(out, "IDAT", comp.data(), static_cast<std::uint32_t>(comp.size()));
    write_chunk(out, "IEND", nullptr, 0);
    return out;
}

struct DecodedPng {
    int width = 0, height = 0, channels = 0;
    std::vector<unsigned char> pixels;
};

inline DecodedPng decode_png(const std::vector<unsigned char>& file, const std::string& name) {
    static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (file.size() < 8 || std::memcmp(file.data(), sig, 8) != 0)
        throw ValidationError("png decode: bad signature in " + name);

    DecodedPng png;
    std::vector<unsigned char> idat;
    size_t pos = 8;
    int bit_depth = 0, color_type = 0;
    bool seen_ihdr = false, seen_iend = false;
    while (pos + 8 <= file.size() && !seen_iend) {
        const std::uint32_t len = read_u32_be(file.data() + pos);
        if (pos + 12 + len > file.size()) throw ValidationError("png decode: truncated chunk in " + name);
        const char* type = reinterpret_cast<const char*>(file.data() + pos + 4);
        const unsigned char* data = file.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw ValidationError("png decode: bad IHDR in " + name);
            png.width = static_cast<int>(read_u32_be(data));
            png.height = static_cast<int>(read_u32_be(data + 4));
            bit_depth = data[8];
            color_type = data[9];
            if (data[12] != 0) throw ValidationError("png decode: interlaced PNG unsupported: " + name);
            seen_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_iend = true;
        }
        pos += 12 + len;
    }
    if (!seen_ihdr || png.width <= 0 || png.height <= 0)
        throw ValidationError("png decode: missing/invalid IHDR in " + name);
    if (bit_depth != 8 || (color_type != 0 && color_type != 2))
        throw ValidationError("png decode: only 8-bit gray/rgb supported: " + name);
    png.channels = color_type == 0 ? 1 : 3;

    const size_t stride = static_cast<size_t>(png.width) * png.channels;
    std::vector<unsigned char> raw(static_cast<size_t>(png.height) * (stride + 1));
    uLongf raw_len = static_cast<uLongf>(raw.size());
    if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        raw_len != raw.size())
        throw ValidationError("png decode: inflate failed for " + name);

    png.pixels.resize(static_cast<size_t>(png.height) * stride);
    const int bpp = png.channels;
    for (int y = 0; y < png.height; ++y) {
        const unsigned char filter = raw[static_cast<size_t>(y) * (stride + 1)];
        const unsigned char* src = raw.data() + static_cast<size_t>(y) * (stride + 1) + 1;
        unsigned char* dst = png.pixels.data() + static_cast<size_t>(y) * stride;
        const unsigned char* up = y > 0 ? dst - stride : nullptr;
        for (size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<size_t>(bpp) ? dst[i - bpp] : 0;
            const int b = up ? up[i] : 0;
            const int c = (up && i >= static_cast<size_t>(bpp)) ? up[i - bpp] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw ValidationError("png decode: unknown filter in " + name);
            }
            dst[i] = static_cast<unsigned char>(v & 0xff);
        }
    }
    return png;
}

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open file: " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(f),
                                      std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write file: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw ValidationError("short write: " + path);
}

}  // namespace detail

inline void write_png(const std::string& path, const ImageRGB& img) {
    std::vector<unsigned char> px(img.pixel_count() * 3);
    for (size_t i = 0; i < img.data.size(); ++i) px[i] = detail::quantize8(img.data[i]);
    detail::write_file_bytes(path, detail::encode_png(px.data(), img.width, img.height, 3));
}

inline void write_png(const std::string& path, const ImageGray& img) {
    std::vector<unsigned char> px(img.pixel_count());
    for (size_t i = 0; i < img.data.size(); ++i) px[i] = detail::quantize8(img.data[i]);
    detail::write_file_bytes(path, detail::encode_png(px.data(), img.width, img.height, 1));
}

inline ImageRGB read_png_rgb(const std::string& path) {
    const auto png = detail::decode_png(detail::read_file_bytes(path), path);
    ImageRGB img(png.width, png.height);
    if (png.channels == 3) {
        for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = png.pixels[i] / 255.0;
    } else {
        for (size_t p = 0; p < img.pixel_count(); ++p)
            img.data[3 * p] = img.data[3 * p + 1] = img.data[3 * p + 2] = png.pixels[p] / 255.0;
    }
    return img;
}

inline ImageGray read_png_gray(const std::string& path) {
    const auto png = detail::decode_png(detail::read_file_bytes(path), path);
    ImageGray img(png.width, png.height);
    if (png.channels == 1) {
        for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = png.pixels[i] / 255.0;
    } else {
        for (size_t p = 0; p < img.pixel_count(); ++p)
            img.data[p] = luma(png.pixels[3 * p] / 255.0, png.pixels[3 * p + 1] / 255.0,
                               png.pixels[3 * p + 2] / 255.0);
    }
    return img;
}

}  // namespace dtgs
