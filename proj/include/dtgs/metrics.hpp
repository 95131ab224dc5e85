#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "dtgs/image.hpp"
#include "dtgs/math.hpp"

namespace dtgs {

inline constexpr double kPsnrCapDb = 99.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;  // (K1 * range)^2, range = 1
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// 10*log10(1/MSE) over all pixels and channels, capped at 99 dB so identical
/// images stay finite in CSV reports.
inline double psnr(const ImageRGB& a, const ImageRGB& b) {
    if (!a.same_shape(b)) throw ValidationError("psnr: image dimension mismatch");
    double se = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.data.size());
    if (mse <= 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

namespace detail {

inline const std::array<double, kSsimWindow>& ssim_kernel() {
    static const std::array<double, kSsimWindow> k = [] {
        std::array<double, kSsimWindow> g{};
        double sum = 0.0;
        for (int i = 0; i < kSsimWindow; ++i) {
            const double d = i - (kSsimWindow - 1) / 2.0;
            g[i] = std::exp(-0.5 * d * d / (kSsimSigma * kSsimSigma));
            sum += g[i];
        }
        for (auto& v : g) v /= sum;
        return g;
    }();
    return k;
}

/// Separable valid convolution of a w*h plane; output is (w-10)*(h-10).
inline void conv_valid(const std::vector<double>& src, int w, int h, std::vector<double>& out,
                       std::vector<double>& scratch) {
    const auto& g = ssim_kernel();
    const int vw = w - kSsimWindow + 1, vh = h - kSsimWindow + 1;
    scratch.assign(static_cast<size_t>(vw) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < vw; ++x) {
            double s = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) s += g[k] * src[static_cast<size_t>(y) * w + x + k];
            scratch[static_cast<size_t>(y) * vw + x] = s;
        }
    out.assign(static_cast<size_t>(vw) * vh, 0.0);
    for (int y = 0; y < vh; ++y)
        for (int x = 0; x < vw; ++x) {
            double s = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) s += g[k] * scratch[static_cast<size_t>(y + k) * vw + x];
            out[static_cast<size_t>(y) * vw + x] = s;
        }
}

/// Adjoint of conv_valid: spreads a (w-10)*(h-10) field back onto a w*h plane.
inline void conv_valid_adjoint(const std::vector<double>& up, int w, int h, std::vector<double>& out,
                               std::vector<double>& scratch) {
    const auto& g = ssim_kernel();
    const int vw = w - kSsimWindow + 1, vh = h - kSsimWindow + 1;
    scratch.assign(static_cast<size_t>(vw) * h, 0.0);
    for (int y = 0; y < vh; ++y)
        for (int x = 0; x < vw; ++x) {
            const double u = up[static_cast<size_t>(y) * vw + x];
            if (u == 0.0) continue;
            for (int k = 0; k < kSsimWindow; ++k) scratch[static_cast<size_t>(y + k) * vw + x] += g[k] * u;
        }
    out.assign(static_cast<size_t>(w) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < vw; ++x) {
            const double u = scratch[static_cast<size_t>(y) * vw + x];
            if (u == 0.0) continue;
            for (int k = 0; k < kSsimWindow; ++k) out[static_cast<size_t>(y) * w + x + k] += g[k] * u;
        }
}

inline void extract_channel(const ImageRGB& img, int c, std::vector<double>& plane) {
    plane.resize(img.pixel_count());
    for (size_t p = 0; p < img.pixel_count(); ++p) plane[p] = img.data[3 * p + c];
}

}  // namespace detail

/// Mean SSIM over valid 11x11 Gaussian windows, per channel then averaged.
/// Images must be at least 11x11.
inline double ssim(const ImageRGB& a, const ImageRGB& b) {
    if (!a.same_shape(b)) throw ValidationError("ssim: image dimension mismatch");
    if (a.width < kSsimWindow || a.height < kSsimWindow)
        throw ValidationError("ssim: image smaller than the 11x11 window");
    const int w = a.width, h = a.height;
    const int vw = w - kSsimWindow + 1, vh = h - kSsimWindow + 1;
    std::vector<double> x, y, xx, yy, xy, mx, my, mxx, myy, mxy, scratch;
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        detail::extract_channel(a, c, x);
        detail::extract_channel(b, c, y);
        const size_t n = x.size();
        xx.resize(n);
        yy.resize(n);
        xy.resize(n);
        for (size_t i = 0; i < n; ++i) {
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        detail::conv_valid(x, w, h, mx, scratch);
        detail::conv_valid(y, w, h, my, scratch);
        detail::conv_valid(xx, w, h, mxx, scratch);
        detail::conv_valid(yy, w, h, myy, scratch);
        detail::conv_valid(xy, w, h, mxy, scratch);
        double acc = 0.0;
        for (size_t i = 0; i < mx.size(); ++i) {
            const double mu_x = mx[i], mu_y = my[i];
            const double sx = mxx[i] - mu_x * mu_x;
            const double sy = myy[i] - mu_y * mu_y;
            const double sxy = mxy[i] - mu_x * mu_y;
            const double a1 = 2.0 * mu_x * mu_y + kSsimC1;
            const double a2 = 2.0 * sxy + kSsimC2;
            const double b1 = mu_x * mu_x + mu_y * mu_y + kSsimC1;
            const double b2 = sx + sy + kSsimC2;
            acc += (a1 * a2) / (b1 * b2);
        }
        total += acc / static_cast<double>(vw * vh);
    }
    return total / 3.0;
}

struct SsimWithGrad {
    double value = 0.0;
    ImageRGB d_first;  // d(mean SSIM)/d(first image)
};

/// Mean SSIM plus its analytic gradient w.r.t. the first image.
inline SsimWithGrad ssim_with_grad(const ImageRGB& a, const ImageRGB& b) {
    if (!a.same_shape(b)) throw ValidationError("ssim: image dimension mismatch");
    if (a.width < kSsimWindow || a.height < kSsimWindow)
        throw ValidationError("ssim: image smaller than the 11x11 window");
    const int w = a.width, h = a.height;
    const int vw = w - kSsimWindow + 1, vh = h - kSsimWindow + 1;
    const double mean_scale = 1.0 / (3.0 * vw * vh);

    SsimWithGrad res;
    res.d_first = ImageRGB(w, h, 0.0);
    std::vector<double> x, y, xx, yy, xy, mx, my, mxx, myy, mxy, scratch;
    std::vector<double> p1(static_cast<size_t>(vw) * vh), p2(p1.size()), p3(p1.size());
    std::vector<double> a1f, a2f, a3f;
    for (int c = 0; c < 3; ++c) {
        detail::extract_channel(a, c, x);
        detail::extract_channel(b, c, y);
        const size_t n = x.size();
        xx.resize(n);
        yy.resize(n);
        xy.resize(n);
        for (size_t i = 0; i < n; ++i) {
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        detail::conv_valid(x, w, h, mx, scratch);
        detail::conv_valid(y, w, h, my, scratch);
        detail::conv_valid(xx, w, h, mxx, scratch);
        detail::conv_valid(yy, w, h, myy, scratch);
        detail::conv_valid(xy, w, h, mxy, scratch);
        for (size_t i = 0; i < mx.size(); ++i) {
            const double mu_x = mx[i], mu_y = my[i];
            const double sx = mxx[i] - mu_x * mu_x;
            const double sy = myy[i] - mu_y * mu_y;
            const double sxy = mxy[i] - mu_x * mu_y;
            const double a1 = 2.0 * mu_x * mu_y + kSsimC1;
            const double a2 = 2.0 * sxy + kSsimC2;
            const double b1 = mu_x * mu_x + mu_y * mu_y + kSsimC1;
            const double b2 = sx + sy + kSsimC2;
            res.value += (a1 * a2) / (b1 * b2) * mean_scale;

            // dS/d(mu_x), dS/d(sigma_x^2), dS/d(sigma_xy); upstream is the mean weight.
            const double ds_dmux = 2.0 * (mu_y * a2 * b1 - mu_x * a1 * a2) / (b1 * b1 * b2);
            const double ds_dsx = -(a1 * a2) / (b1 * b2 * b2);
            const double ds_dsxy = 2.0 * a1 / (b1 * b2);
            // Window stats depend on x(q) through mu_x (w), sigma_x^2 (2w(x-mu_x)),
            // sigma_xy (w(y-mu_y)); collect the three convolution fields.
            p1[i] = mean_scale * (ds_dmux - 2.0 * mu_x * ds_dsx - mu_y * ds_dsxy);
            p2[i] = mean_scale * 2.0 * ds_dsx;
            p3[i] = mean_scale * ds_dsxy;
        }
        detail::conv_valid_adjoint(p1, w, h, a1f, scratch);
        detail::conv_valid_adjoint(p2, w, h, a2f, scratch);
        detail::conv_valid_adjoint(p3, w, h, a3f, scratch);
        for (size_t q = 0; q < n; ++q)
            res.d_first.data[3 * q + c] = a1f[q] + x[q] * a2f[q] + y[q] * a3f[q];
    }
    return res;
}

/// Per-view metric rows plus scene means, as written by the eval command.
struct MetricReport {
    struct Row {
        std::string scene;
        int view_id = 0;
        double psnr_db = 0.0;
        double ssim = 0.0;
    };
    std::vector<Row> rows;

    double mean_psnr() const {
        double s = 0.0;
        for (const auto& r : rows) s += r.psnr_db;
        return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
    }
    double mean_ssim() const {
        double s = 0.0;
        for (const auto& r : rows) s += r.ssim;
        return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
    }
};

}  // namespace dtgs
