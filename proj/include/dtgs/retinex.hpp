#pragma once

#include <algorithm>
#include <vector>

#include "dtgs/image.hpp"
#include "dtgs/math.hpp"

namespace dtgs {

inline constexpr double kIllumFloor = 1e-3;  // epsilon floor for L

/// Trainable per-view enhancer: a coarse log-illumination grid (bilinearly
/// upsampled to the image) plus a learned correction exponent. The exponent is
/// parametrized through softplus so the raw value is unconstrained.
struct EnhancerParams {
    int grid_h = 16;
    int grid_w = 12;
    std::vector<double> log_grid;  // grid_h * grid_w, row-major
    double gamma_raw = 0.0;
    double exposure_target = 0.5;  // E, not trained

    static EnhancerParams make(int gh, int gw, double exposure_target, double gamma_eff_init = 2.2) {
        EnhancerParams p;
        p.grid_h = gh;
        p.grid_w = gw;
        p.log_grid.assign(static_cast<size_t>(gh) * gw, 0.0);
        p.gamma_raw = softplus_inverse(gamma_eff_init);
        p.exposure_target = exposure_target;
        return p;
    }

    /// Data-driven start: each cell holds the log of a high quantile of the
    /// max-channel over its pixel footprint (the usual Retinex illumination
    /// seed), so optimization refines rather than discovers L.
    static EnhancerParams init_from_image(const ImageRGB& i_low, int gh, int gw,
                                          double exposure_target, double gamma_eff_init = 2.2);

    double gamma_eff() const { return softplus(gamma_raw); }
    size_t param_count() const { return log_grid.size() + 1; }

    bool all_finite() const {
        for (double v : log_grid)
            if (!std::isfinite(v)) return false;
        return std::isfinite(gamma_raw);
    }
};

/// Retinex split of a low-light image: I_low = R (.) L, plus the corrected
/// illumination L'.
struct Decomposition {
    ImageRGB reflectance;   // R, clamped to [0,1]
    ImageGray illumination; // L >= kIllumFloor
    ImageGray corrected;    // L' in (0,1]
};

/// Gradients w.r.t. one view's enhancer parameters.
struct EnhancerGrad {
    std::vector<double> grid;
    double gamma_raw = 0.0;

    explicit EnhancerGrad(size_t grid_size = 0) : grid(grid_size, 0.0) {}
    void add_scaled(const EnhancerGrad& o, double s) {
        for (size_t i = 0; i < grid.size(); ++i) grid[i] += s * o.grid[i];
        gamma_raw += s * o.gamma_raw;
    }
};

namespace detail {

struct BilerpTap {
    int cell[4];
    double weight[4];
};

/// Sample position of pixel (y,x) in grid space, align-corners=false with edge clamp.
inline BilerpTap bilerp_tap(int y, int x, int w, int h, int gw, int gh) {
    const double gx = (x + 0.5) * gw / static_cast<double>(w) - 0.5;
    const double gy = (y + 0.5) * gh / static_cast<double>(h) - 0.5;
    double fx = gx - std::floor(gx), fy = gy - std::floor(gy);
    int x0 = static_cast<int>(std::floor(gx)), y0 = static_cast<int>(std::floor(gy));
    int x1 = x0 + 1, y1 = y0 + 1;
    x0 = std::clamp(x0, 0, gw - 1);
    x1 = std::clamp(x1, 0, gw - 1);
    y0 = std::clamp(y0, 0, gh - 1);
    y1 = std::clamp(y1, 0, gh - 1);
    BilerpTap t;
    t.cell[0] = y0 * gw + x0;
    t.cell[1] = y0 * gw + x1;
    t.cell[2] = y1 * gw + x0;
    t.cell[3] = y1 * gw + x1;
    t.weight[0] = (1 - fy) * (1 - fx);
    t.weight[1] = (1 - fy) * fx;
    t.weight[2] = fy * (1 - fx);
    t.weight[3] = fy * fx;
    return t;
}

}  // namespace detail

/// Bilinear upsample of the log grid to per-pixel log illumination.
inline ImageGray upsample_log_grid(const EnhancerParams& p, int width, int height) {
    ImageGray v(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const auto t = detail::bilerp_tap(y, x, width, height, p.grid_w, p.grid_h);
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += t.weight[k] * p.log_grid[t.cell[k]];
            v.at(y, x) = s;
        }
    return v;
}

/// Adjoint of upsample_log_grid: scatter a per-pixel field back onto grid cells.
inline void scatter_to_grid(const ImageGray& dv, const EnhancerParams& p, std::vector<double>& grid_grad) {
    for (int y = 0; y < dv.height; ++y)
        for (int x = 0; x < dv.width; ++x) {
            const double g = dv.at(y, x);
            if (g == 0.0) continue;
            const auto t = detail::bilerp_tap(y, x, dv.width, dv.height, p.grid_w, p.grid_h);
            for (int k = 0; k < 4; ++k) grid_grad[t.cell[k]] += t.weight[k] * g;
        }
}

inline ImageGray correct_illumination(const ImageGray& l, const EnhancerParams& p) {
    const double inv_gamma = 1.0 / p.gamma_eff();
    ImageGray out(l.width, l.height);
    for (size_t i = 0; i < l.data.size(); ++i)
        out.data[i] = std::clamp(std::pow(l.data[i], inv_gamma), kIllumFloor, 1.0);
    return out;
}

inline Decomposition decompose(const ImageRGB& i_low, const EnhancerParams& p) {
    if (!p.all_finite()) throw ValidationError("decompose: enhancer grid contains non-finite values");
    Decomposition d;
    const ImageGray v = upsample_log_grid(p, i_low.width, i_low.height);
    d.illumination = ImageGray(i_low.width, i_low.height);
    for (size_t i = 0; i < v.data.size(); ++i)
        d.illumination.data[i] = std::max(std::exp(v.data[i]), kIllumFloor);
    d.reflectance = ImageRGB(i_low.width, i_low.height);
    for (size_t px = 0; px < i_low.pixel_count(); ++px) {
        const double l = d.illumination.data[px];
        for (int c = 0; c < 3; ++c)
            d.reflectance.data[3 * px + c] = clamp01(i_low.data[3 * px + c] / l);
    }
    d.corrected = correct_illumination(d.illumination, p);
    return d;
}

/// Forward pass with everything the backward passes need.
struct EnhancerEval {
    Decomposition dec;
    ImageGray log_illum;  // pre-floor bilinear field
    ImageRGB i_enh;
    double gamma_eff = 0.0;
};

inline EnhancerEval enhance_eval(const ImageRGB& i_low, const EnhancerParams& p) {
    if (!p.all_finite()) throw ValidationError("enhance: enhancer grid contains non-finite values");
    EnhancerEval e;
    e.log_illum = upsample_log_grid(p, i_low.width, i_low.height);
    e.gamma_eff = p.gamma_eff();
    e.dec.illumination = ImageGray(i_low.width, i_low.height);
    for (size_t i = 0; i < e.log_illum.data.size(); ++i)
        e.dec.illumination.data[i] = std::max(std::exp(e.log_illum.data[i]), kIllumFloor);
    e.dec.reflectance = ImageRGB(i_low.width, i_low.height);
    e.dec.corrected = correct_illumination(e.dec.illumination, p);
    e.i_enh = ImageRGB(i_low.width, i_low.height);
    for (size_t px = 0; px < i_low.pixel_count(); ++px) {
        const double l = e.dec.illumination.data[px];
        const double lp = e.dec.corrected.data[px];
        for (int c = 0; c < 3; ++c) {
            const double r = clamp01(i_low.data[3 * px + c] / l);
            e.dec.reflectance.data[3 * px + c] = r;
            e.i_enh.data[3 * px + c] = clamp01(r * lp);
        }
    }
    return e;
}

/// I_enh = R (.) L'.
inline ImageRGB enhance(const ImageRGB& i_low, const EnhancerParams& p) {
    return enhance_eval(i_low, p).i_enh;
}

/// Chain an upstream dL/d(I_enh) image back to grid and gamma parameters.
inline EnhancerGrad enhancer_backward(const ImageRGB& i_low, const EnhancerParams& p,
                                      const EnhancerEval& e, const ImageRGB& d_ienh) {
    EnhancerGrad g(p.log_grid.size());
    ImageGray dv(i_low.width, i_low.height, 0.0);
    const double gamma = e.gamma_eff;
    double d_gamma_eff = 0.0;
    for (size_t px = 0; px < i_low.pixel_count(); ++px) {
        const double l = e.dec.illumination.data[px];
        const double lp = e.dec.corrected.data[px];
        const double lp_raw = std::pow(l, 1.0 / gamma);
        const bool lp_interior = lp_raw > kIllumFloor && lp_raw < 1.0;
        double dl = 0.0, dlp = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double u = d_ienh.data[3 * px + c];
            if (u == 0.0) continue;
            const double ratio = i_low.data[3 * px + c] / l;
            const double r = e.dec.reflectance.data[3 * px + c];
            // product R*L' lies in [0,1], so the final clamp carries gradient
            dlp += u * r;
            if (ratio <= 1.0) dl += u * lp * (-ratio / l);  // through R = I/L
        }
        if (lp_interior) {
            dl += dlp * (lp_raw / (gamma * l));
            d_gamma_eff += dlp * lp_raw * std::log(l) * (-1.0 / (gamma * gamma));
        }
        // L = max(exp(v), floor); below the floor the grid gets no gradient
        if (std::exp(e.log_illum.data[px]) > kIllumFloor) dv.data[px] = dl * l;
    }
    scatter_to_grid(dv, p, g.grid);
    g.gamma_raw = d_gamma_eff * sigmoid(p.gamma_raw);
    return g;
}

inline EnhancerParams EnhancerParams::init_from_image(const ImageRGB& i_low, int gh, int gw,
                                                      double exposure_target,
                                                      double gamma_eff_init) {
    EnhancerParams p = make(gh, gw, exposure_target, gamma_eff_init);
    std::vector<std::vector<double>> buckets(p.log_grid.size());
    for (int y = 0; y < i_low.height; ++y) {
        const int gy = std::min(gh - 1, y * gh / i_low.height);
        for (int x = 0; x < i_low.width; ++x) {
            const int gx = std::min(gw - 1, x * gw / i_low.width);
            const double mc = std::max({i_low.at(y, x, 0), i_low.at(y, x, 1), i_low.at(y, x, 2)});
            buckets[static_cast<size_t>(gy) * gw + gx].push_back(mc);
        }
    }
    for (size_t c = 0; c < buckets.size(); ++c) {
        auto& b = buckets[c];
        double v = kIllumFloor;
        if (!b.empty()) {
            const size_t q = (b.size() - 1) * 9 / 10;
            std::nth_element(b.begin(), b.begin() + q, b.end());
            v = std::max(kIllumFloor, b[q]);
        }
        p.log_grid[c] = std::log(v);
    }
    return p;
}

struct EnhancementLossWeights {
    double reconstruction = 1.0;
    double smoothness = 0.1;
    double exposure = 0.5;
    double edge_beta = 10.0;  // edge weighting strength for the smoothness term
};

struct EnhancementLossResult {
    double value = 0.0;
    EnhancerGrad grad;
};

/// Enhancer training loss: l1 Retinex reconstruction + edge-weighted smoothness
/// of the log illumination + exposure prior on mean enhanced luminance.
inline EnhancementLossResult enhancement_loss(const ImageRGB& i_low, const EnhancerParams& p,
                                              const EnhancerEval& e,
                                              const EnhancementLossWeights& w = {}) {
    EnhancementLossResult res;
    res.grad = EnhancerGrad(p.log_grid.size());
    const int width = i_low.width, height = i_low.height;
    const size_t n_px = i_low.pixel_count();

    // Reconstruction: |R*L - I_low| is nonzero only where the reflectance clamp
    // is active (L < I), where it equals I - L.
    double rec = 0.0;
    ImageGray d_l(width, height, 0.0);
    const double rec_scale = w.reconstruction / static_cast<double>(3 * n_px);
    for (size_t px = 0; px < n_px; ++px) {
        const double l = e.dec.illumination.data[px];
        for (int c = 0; c < 3; ++c) {
            const double i_c = i_low.data[3 * px + c];
            if (l < i_c) {
                rec += i_c - l;
                d_l.data[px] -= rec_scale;
            }
        }
    }
    res.value += w.reconstruction * rec / static_cast<double>(3 * n_px);

    // Edge-weighted smoothness on the bilinear log-illumination field.
    const ImageGray low_luma = luma_image(i_low);
    ImageGray dv(width, height, 0.0);
    double tv = 0.0;
    const size_t tv_count = static_cast<size_t>(width - 1) * height + static_cast<size_t>(width) * (height - 1);
    const double tv_scale = tv_count ? w.smoothness / static_cast<double>(tv_count) : 0.0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x + 1 < width; ++x) {
            const double t = e.log_illum.at(y, x + 1) - e.log_illum.at(y, x);
            const double omega = std::exp(-w.edge_beta * std::abs(low_luma.at(y, x + 1) - low_luma.at(y, x)));
            tv += omega * std::abs(t);
            const double s = tv_scale * omega * sign(t);
            dv.at(y, x + 1) += s;
            dv.at(y, x) -= s;
        }
    for (int y = 0; y + 1 < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double t = e.log_illum.at(y + 1, x) - e.log_illum.at(y, x);
            const double omega = std::exp(-w.edge_beta * std::abs(low_luma.at(y + 1, x) - low_luma.at(y, x)));
            tv += omega * std::abs(t);
            const double s = tv_scale * omega * sign(t);
            dv.at(y + 1, x) += s;
            dv.at(y, x) -= s;
        }
    if (tv_count) res.value += w.smoothness * tv / static_cast<double>(tv_count);

    // Exposure prior on mean enhanced luminance; flows through the full chain.
    const double m = mean_luma(e.i_enh);
    res.value += w.exposure * std::abs(m - p.exposure_target);
    const double exp_s = w.exposure * sign(m - p.exposure_target) / static_cast<double>(n_px);
    ImageRGB d_ienh(width, height, 0.0);
    for (size_t px = 0; px < n_px; ++px) {
        d_ienh.data[3 * px] = exp_s * kLumaR;
        d_ienh.data[3 * px + 1] = exp_s * kLumaG;
        d_ienh.data[3 * px + 2] = exp_s * kLumaB;
    }
    res.grad = enhancer_backward(i_low, p, e, d_ienh);

    // Fold the direct L-path (reconstruction) and v-path (smoothness) pieces in.
    for (size_t px = 0; px < n_px; ++px) {
        const double l = e.dec.illumination.data[px];
        if (std::exp(e.log_illum.data[px]) > kIllumFloor) dv.data[px] += d_l.data[px] * l;
    }
    scatter_to_grid(dv, p, res.grad.grid);
    return res;
}

}  // namespace dtgs
