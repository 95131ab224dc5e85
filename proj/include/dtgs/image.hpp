#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dtgs/math.hpp"

namespace dtgs {

// ITU-R BT.601 luma weights, shared by every luminance computation in the pipeline.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

/// Row-major single-channel image, double precision.
struct ImageGray {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    ImageGray() = default;
    ImageGray(int w, int h, double fill = 0.0) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t pixel_count() const { return data.size(); }

    bool same_shape(const ImageGray& o) const { return width == o.width && height == o.height; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Row-major interleaved RGB image, double precision.
struct ImageRGB {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // r,g,b per pixel

    ImageRGB() = default;
    ImageRGB(int w, int h, double fill = 0.0) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, fill) {}

    double& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    double at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }

    Vec3 pixel(int y, int x) const {
        const size_t i = (static_cast<size_t>(y) * width + x) * 3;
        return Vec3(data[i], data[i + 1], data[i + 2]);
    }
    void set_pixel(int y, int x, const Vec3& v) {
        const size_t i = (static_cast<size_t>(y) * width + x) * 3;
        data[i] = v[0];
        data[i + 1] = v[1];
        data[i + 2] = v[2];
    }

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }

    bool same_shape(const ImageRGB& o) const { return width == o.width && height == o.height; }
    bool same_shape(const ImageGray& o) const { return width == o.width && height == o.height; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline double luma(double r, double g, double b) { return kLumaR * r + kLumaG * g + kLumaB * b; }

inline ImageGray luma_image(const ImageRGB& img) {
    ImageGray out(img.width, img.height);
    for (size_t p = 0; p < img.pixel_count(); ++p)
        out.data[p] = luma(img.data[3 * p], img.data[3 * p + 1], img.data[3 * p + 2]);
    return out;
}

inline double mean_luma(const ImageRGB& img) {
    double s = 0.0;
    for (size_t p = 0; p < img.pixel_count(); ++p)
        s += luma(img.data[3 * p], img.data[3 * p + 1], img.data[3 * p + 2]);
    return img.pixel_count() ? s / static_cast<double>(img.pixel_count()) : 0.0;
}

}  // namespace dtgs
