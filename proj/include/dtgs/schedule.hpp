#pragma once

#include <string>

#include "dtgs/image.hpp"
#include "dtgs/math.hpp"
#include "dtgs/metrics.hpp"
#include "dtgs/thermal.hpp"

namespace dtgs {

/// Evolving supervision target for one view.
struct SupervisionState {
    ImageRGB gt_current;       // GT(t)
    int iteration = 0;         // t of the last update
    int t_transition = 8000;

    static SupervisionState init_from(const ImageRGB& i_low, int t_transition = 8000) {
        SupervisionState s;
        s.gt_current = i_low;  // GT(0) = I_low, bit-exact
        s.iteration = 0;
        s.t_transition = t_transition;
        return s;
    }
};

/// Blending factor alpha(t) = min(1, t / T_transition).
inline double alpha_blend(int t, int t_transition) {
    if (t_transition <= 0) throw ValidationError("alpha_blend: T_transition must be positive");
    if (t < 0) throw ValidationError("alpha_blend: t must be nonnegative");
    return std::min(1.0, static_cast<double>(t) / static_cast<double>(t_transition));
}

/// GT(t) = (1 - alpha) * GT(t-1) + alpha * I_enh, pixelwise.
inline void blend_gt(SupervisionState& state, const ImageRGB& i_enh, double alpha) {
    if (!state.gt_current.same_shape(i_enh))
        throw ValidationError("update_gt: enhanced image dimensions do not match GT");
    if (!i_enh.all_finite()) throw NumericalError("update_gt: non-finite enhanced image");
    for (size_t i = 0; i < state.gt_current.data.size(); ++i)
        state.gt_current.data[i] = (1.0 - alpha) * state.gt_current.data[i] + alpha * i_enh.data[i];
}

inline void update_gt(SupervisionState& state, const ImageRGB& i_enh, int t) {
    blend_gt(state, i_enh, alpha_blend(t, state.t_transition));
    state.iteration = t;
}

/// Task-level loss weights (lambda_enh, lambda_gs, lambda_therm).
struct LossWeights {
    double enh = 0.0;
    double gs = 0.0;
    double therm = 0.0;

    double sum() const { return enh + gs + therm; }
    bool valid(double tol = 1e-12) const {
        return enh >= 0.0 && gs >= 0.0 && therm >= 0.0 && std::abs(sum() - 1.0) <= tol &&
               gs >= 0.1 - tol;
    }
};

/// Normalize a raw triple to sum 1, then project so lambda_gs >= 0.1.
inline LossWeights normalize_weights(double enh, double gs, double therm) {
    if (enh < 0.0 || gs < 0.0 || therm < 0.0)
        throw ValidationError("normalize_weights: negative component");
    const double s = enh + gs + therm;
    if (!(s > 0.0)) throw ValidationError("normalize_weights: zero-sum triple");
    LossWeights w{enh / s, gs / s, therm / s};
    if (w.gs < 0.1) {
        const double rest = w.enh + w.therm;
        w.gs = 0.1;
        if (rest > 0.0) {
            w.enh *= 0.9 / rest;
            w.therm *= 0.9 / rest;
        } else {
            w.enh = 0.45;
            w.therm = 0.45;
        }
    }
    return w;
}

enum class ScheduleMode {
    FourStage,   // piecewise linear between the two triples at 0.2/0.4/0.7
    ThreeStage,  // enhancer weight 0.3 -> 0.2 -> 0.1 at 30%/70%
};

struct ScheduleConfig {
    double initial[3] = {0.1, 0.9, 0.2};  // raw (enh, gs, therm), normalized on use
    double final_[3] = {0.1, 0.9, 0.2};
    int total_iters = 30000;
    double breakpoints[3] = {0.2, 0.4, 0.7};
    ScheduleMode mode = ScheduleMode::FourStage;

    bool valid() const {
        return total_iters > 0 && breakpoints[0] > 0.0 && breakpoints[0] < breakpoints[1] &&
               breakpoints[1] < breakpoints[2] && breakpoints[2] < 1.0;
    }
};

/// Schedule evaluated at training fraction u = t/T in [0,1].
inline LossWeights lambda_schedule_frac(double u, const ScheduleConfig& cfg) {
    if (!cfg.valid()) throw ValidationError("lambda_schedule: invalid schedule config");
    if (cfg.mode == ScheduleMode::ThreeStage) {
        const double enh = u < 0.3 ? 0.3 : (u < 0.7 ? 0.2 : 0.1);
        // Remaining mass split between gs and therm in the default raw ratio.
        const double rest = 1.0 - enh;
        return normalize_weights(enh, rest * 0.9 / 1.1, rest * 0.2 / 1.1);
    }
    const double b1 = cfg.breakpoints[0], b2 = cfg.breakpoints[1];
    double raw[3];
    for (int k = 0; k < 3; ++k) {
        if (u < b1) {
            raw[k] = cfg.initial[k];
        } else if (u < b2) {
            const double f = (u - b1) / (b2 - b1);
            raw[k] = cfg.initial[k] + (cfg.final_[k] - cfg.initial[k]) * f;
        } else {
            // Stages 3 and 4 hold the final triple; stage 4 refinement happens
            // through the learning-rate decay, not the weights.
            raw[k] = cfg.final_[k];
        }
    }
    return normalize_weights(raw[0], raw[1], raw[2]);
}

inline LossWeights lambda_schedule(int t, const ScheduleConfig& cfg) {
    if (t < 0 || t > cfg.total_iters) throw ValidationError("lambda_schedule: t outside [0, T]");
    return lambda_schedule_frac(static_cast<double>(t) / static_cast<double>(cfg.total_iters), cfg);
}

struct GsLossWeights {
    double l1 = 0.7;
    double ssim = 0.2;
    double corner = 0.1;       // l1 on finite-difference image gradients
    double consistency = 0.1;  // rendered-vs-thermal alignment
};

struct GsLossResult {
    double value = 0.0;
    ImageRGB d_rendered;
};

/// Composite reconstruction loss against the evolving GT:
/// l1 + (1 - SSIM) + gradient-map l1 + rendered/thermal alignment.
inline GsLossResult gs_loss(const ImageRGB& i_rendered, const ImageRGB& gt, const ImageGray& i_therm,
                            const GsLossWeights& w = {}) {
    if (!i_rendered.same_shape(gt) || !i_rendered.same_shape(i_therm))
        throw ValidationError("gs_loss: image dimension mismatch");
    const int width = i_rendered.width, height = i_rendered.height;
    GsLossResult res;
    res.d_rendered = ImageRGB(width, height, 0.0);

    const double n_samples = static_cast<double>(i_rendered.data.size());
    double l1 = 0.0;
    for (size_t i = 0; i < i_rendered.data.size(); ++i) {
        const double d = i_rendered.data[i] - gt.data[i];
        l1 += std::abs(d);
        res.d_rendered.data[i] += w.l1 * sign(d) / n_samples;
    }
    res.value += w.l1 * l1 / n_samples;

    if (w.ssim != 0.0) {
        const SsimWithGrad s = ssim_with_grad(i_rendered, gt);
        res.value += w.ssim * (1.0 - s.value);
        for (size_t i = 0; i < res.d_rendered.data.size(); ++i)
            res.d_rendered.data[i] -= w.ssim * s.d_first.data[i];
    }

    if (w.corner != 0.0) {
        const size_t n_grad = (static_cast<size_t>(width - 1) * height +
                               static_cast<size_t>(width) * (height - 1)) * 3;
        const double scale = w.corner / static_cast<double>(n_grad);
        double acc = 0.0;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x + 1 < width; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double d = (i_rendered.at(y, x + 1, c) - i_rendered.at(y, x, c)) -
                                     (gt.at(y, x + 1, c) - gt.at(y, x, c));
                    acc += std::abs(d);
                    const double s = scale * sign(d);
                    res.d_rendered.at(y, x + 1, c) += s;
                    res.d_rendered.at(y, x, c) -= s;
                }
        for (int y = 0; y + 1 < height; ++y)
            for (int x = 0; x < width; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double d = (i_rendered.at(y + 1, x, c) - i_rendered.at(y, x, c)) -
                                     (gt.at(y + 1, x, c) - gt.at(y, x, c));
                    acc += std::abs(d);
                    const double s = scale * sign(d);
                    res.d_rendered.at(y + 1, x, c) += s;
                    res.d_rendered.at(y, x, c) -= s;
                }
        res.value += w.corner * acc / static_cast<double>(n_grad);
    }

    if (w.consistency != 0.0) {
        const AlignedGray a_rend = phi_rgb(i_rendered);
        const AlignedGray a_therm = phi_therm(i_therm);
        const double inv_n = 1.0 / static_cast<double>(i_rendered.pixel_count());
        ImageGray upstream(width, height, 0.0);
        double acc = 0.0;
        for (size_t p = 0; p < i_rendered.pixel_count(); ++p) {
            const double d = a_rend.img.data[p] - a_therm.img.data[p];
            acc += std::abs(d);
            upstream.data[p] = w.consistency * sign(d) * inv_n;
        }
        res.value += w.consistency * acc * inv_n;
        const ImageRGB d_cons = luma_backward(phi_backward(a_rend, upstream));
        for (size_t i = 0; i < res.d_rendered.data.size(); ++i)
            res.d_rendered.data[i] += d_cons.data[i];
    }
    return res;
}

struct LossParts {
    double enh = 0.0;
    double gs = 0.0;
    double therm = 0.0;
};

/// Weighted total loss; each part must be finite and nonnegative.
inline double total_loss(const LossParts& parts, const LossWeights& w) {
    if (!std::isfinite(parts.enh) || parts.enh < 0.0)
        throw NumericalError("total_loss: invalid enhancement term");
    if (!std::isfinite(parts.gs) || parts.gs < 0.0)
        throw NumericalError("total_loss: invalid reconstruction term");
    if (!std::isfinite(parts.therm) || parts.therm < 0.0)
        throw NumericalError("total_loss: invalid thermal term");
    return w.enh * parts.enh + w.gs * parts.gs + w.therm * parts.therm;
}

}  // namespace dtgs
