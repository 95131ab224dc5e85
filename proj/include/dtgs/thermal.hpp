#pragma once

#include <string>

#include "dtgs/image.hpp"
#include "dtgs/math.hpp"

namespace dtgs {

// Range below which a min-max normalization is treated as degenerate (constant
// image); the aligned output is then all zeros and carries no gradient.
inline constexpr double kPhiDegenerateRange = 1e-12;

/// Min-max normalized image plus the state needed to differentiate through the
/// normalization (min/max treated as the values at their first-occurrence pixels).
struct AlignedGray {
    ImageGray img;
    double lo = 0.0, hi = 0.0;
    size_t argmin = 0, argmax = 0;
    bool degenerate = false;
};

/// Min-max normalization of a single-channel image to [0,1].
inline AlignedGray phi_gray(const ImageGray& src) {
    AlignedGray out;
    out.img = ImageGray(src.width, src.height);
    if (src.data.empty()) {
        out.degenerate = true;
        return out;
    }
    out.lo = src.data[0];
    out.hi = src.data[0];
    for (size_t i = 1; i < src.data.size(); ++i) {
        if (src.data[i] < out.lo) {
            out.lo = src.data[i];
            out.argmin = i;
        }
        if (src.data[i] > out.hi) {
            out.hi = src.data[i];
            out.argmax = i;
        }
    }
    const double range = out.hi - out.lo;
    if (range < kPhiDegenerateRange) {
        out.degenerate = true;  // all zeros by convention
        return out;
    }
    for (size_t i = 0; i < src.data.size(); ++i) out.img.data[i] = (src.data[i] - out.lo) / range;
    return out;
}

/// Luminance followed by min-max normalization (the RGB alignment map).
inline AlignedGray phi_rgb(const ImageRGB& src) { return phi_gray(luma_image(src)); }

/// Thermal alignment map: plain min-max normalization.
inline AlignedGray phi_therm(const ImageGray& src) { return phi_gray(src); }

/// Cross-modal map applied to enhanced RGB so it matches the thermal range.
/// Numerically identical to phi_rgb; kept as its own operation because the
/// loss formula names the two roles separately.
inline AlignedGray phi_cross(const ImageRGB& src) { return phi_rgb(src); }

/// Backward through phi_gray: upstream is dL/d(normalized), result is dL/d(source).
/// The min/max *indices* are held fixed; their values still receive gradient.
inline ImageGray phi_backward(const AlignedGray& aligned, const ImageGray& upstream) {
    ImageGray grad(aligned.img.width, aligned.img.height, 0.0);
    if (aligned.degenerate) return grad;
    const double inv_range = 1.0 / (aligned.hi - aligned.lo);
    double sum_u = 0.0, sum_u_phi = 0.0;
    for (size_t i = 0; i < upstream.data.size(); ++i) {
        const double u = upstream.data[i];
        grad.data[i] = u * inv_range;
        sum_u += u;
        sum_u_phi += u * aligned.img.data[i];
    }
    grad.data[aligned.argmin] += (sum_u_phi - sum_u) * inv_range;
    grad.data[aligned.argmax] += -sum_u_phi * inv_range;
    return grad;
}

/// Spread a per-pixel luma gradient onto RGB channels.
inline ImageRGB luma_backward(const ImageGray& dluma) {
    ImageRGB grad(dluma.width, dluma.height, 0.0);
    for (size_t p = 0; p < dluma.pixel_count(); ++p) {
        grad.data[3 * p] = dluma.data[p] * kLumaR;
        grad.data[3 * p + 1] = dluma.data[p] * kLumaG;
        grad.data[3 * p + 2] = dluma.data[p] * kLumaB;
    }
    return grad;
}

struct ThermalLossResult {
    double value = 0.0;
    ImageRGB d_enhanced;   // dL/d(I_enh)
    ImageRGB d_rendered;   // dL/d(I_rendered)
};

/// Dual-term thermal consistency loss:
///   gamma * mean|phi_rgb(I_enh) - phi_rgb(I_rend)|
///   + (1-gamma) * mean|phi_cross(I_enh) - phi_therm(I_therm)|
inline ThermalLossResult thermal_loss(const ImageRGB& i_enh, const ImageRGB& i_rendered,
                                      const ImageGray& i_therm, double gamma) {
    if (!i_enh.same_shape(i_rendered) || !i_enh.same_shape(i_therm))
        throw ValidationError("thermal_loss: image dimension mismatch");
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw ValidationError("thermal_loss: gamma must be in [0,1]");

    const AlignedGray a_enh = phi_rgb(i_enh);
    const AlignedGray a_rend = phi_rgb(i_rendered);
    const AlignedGray a_cross = phi_cross(i_enh);
    const AlignedGray a_therm = phi_therm(i_therm);

    const double inv_n = 1.0 / static_cast<double>(i_enh.pixel_count());
    ThermalLossResult res;
    ImageGray u_enh(i_enh.width, i_enh.height, 0.0);    // upstream into a_enh
    ImageGray u_rend(i_enh.width, i_enh.height, 0.0);   // upstream into a_rend
    ImageGray u_cross(i_enh.width, i_enh.height, 0.0);  // upstream into a_cross

    double term1 = 0.0, term2 = 0.0;
    for (size_t p = 0; p < i_enh.pixel_count(); ++p) {
        const double d1 = a_enh.img.data[p] - a_rend.img.data[p];
        term1 += std::abs(d1);
        const double s1 = gamma * sign(d1) * inv_n;
        u_enh.data[p] = s1;
        u_rend.data[p] = -s1;

        const double d2 = a_cross.img.data[p] - a_therm.img.data[p];
        term2 += std::abs(d2);
        u_cross.data[p] = (1.0 - gamma) * sign(d2) * inv_n;
    }
    res.value = gamma * term1 * inv_n + (1.0 - gamma) * term2 * inv_n;

    ImageGray dl_enh = phi_backward(a_enh, u_enh);
    const ImageGray dl_cross = phi_backward(a_cross, u_cross);
    for (size_t i = 0; i < dl_enh.data.size(); ++i) dl_enh.data[i] += dl_cross.data[i];
    res.d_enhanced = luma_backward(dl_enh);
    res.d_rendered = luma_backward(phi_backward(a_rend, u_rend));
    return res;
}

}  // namespace dtgs
