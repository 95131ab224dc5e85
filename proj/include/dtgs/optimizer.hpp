#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dtgs/bundle.hpp"
#include "dtgs/gaussian.hpp"
#include "dtgs/math.hpp"

namespace dtgs {

/// Per-parameter-class learning-rate multipliers, indexed by ParamClass.
struct LrMultipliers {
    double values[kNumParamClasses] = {1.0, 0.5, 0.1, 5.0, 2.5, 1.0, 1.0};
    double of(ParamClass c) const { return values[static_cast<int>(c)]; }
};

struct AdamState {
    std::vector<double> m;  // first moments, aligned with the bundle
    std::vector<double> v;  // second moments
    long step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_layout(const BundleLayout& l) {
        AdamState s;
        s.m.assign(l.total(), 0.0);
        s.v.assign(l.total(), 0.0);
        return s;
    }
};

/// Bias-corrected Adam update in place; quaternions are renormalized afterward.
inline void adam_step(ParamBundle& params, const GradBundle& grads, AdamState& state, double lr,
                      const LrMultipliers& mult = {}) {
    if (params.values.size() != grads.values.size() || params.values.size() != state.m.size())
        throw ValidationError("adam_step: shape mismatch between params, grads and state");
    if (!(lr > 0.0)) throw ValidationError("adam_step: learning rate must be positive");
    for (size_t i = 0; i < grads.values.size(); ++i)
        if (!std::isfinite(grads.values[i]))
            throw NumericalError("adam_step: non-finite gradient at parameter " + std::to_string(i));

    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (size_t i = 0; i < params.values.size(); ++i) {
        const double g = grads.values[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        const double step = lr * mult.of(params.layout.class_of(i));
        params.values[i] -= step * mhat / (std::sqrt(vhat) + state.eps);
    }

    for (int i = 0; i < params.layout.n_gaussians; ++i) {
        double* s = params.gaussian_slot(i);
        const double n = std::sqrt(s[6] * s[6] + s[7] * s[7] + s[8] * s[8] + s[9] * s[9]);
        if (n > 0.0)
            for (int k = 0; k < 4; ++k) s[6 + k] /= n;
        else
            s[6] = 1.0, s[7] = s[8] = s[9] = 0.0;
    }
}

/// Warm-restart cosine schedule: base -> base/100 within each period, resetting
/// at period boundaries.
inline double cosine_lr(int t, double base_lr, int period) {
    if (period <= 0) throw ValidationError("cosine_lr: period must be positive");
    const double lr_min = base_lr / 100.0;
    const int phase = t % period;
    return lr_min + (base_lr - lr_min) *
                        (1.0 + std::cos(M_PI * static_cast<double>(phase) / period)) * 0.5;
}

/// Single monotone cosine decay reaching the floor at `horizon` and staying there.
inline double cosine_lr_single(int t, double base_lr, int horizon) {
    if (horizon <= 0) throw ValidationError("cosine_lr: horizon must be positive");
    const double lr_min = base_lr / 100.0;
    const int phase = std::min(t, horizon);
    return lr_min + (base_lr - lr_min) *
                        (1.0 + std::cos(M_PI * static_cast<double>(phase) / horizon)) * 0.5;
}

struct PruneResult {
    std::vector<int> kept;  // old indices of the survivors, in order
    int removed = 0;
};

/// Drop Gaussians whose activated opacity falls below the threshold.
inline PruneResult prune(std::vector<Gaussian3D>& gaussians, double opacity_threshold = 0.005) {
    PruneResult res;
    res.kept.reserve(gaussians.size());
    std::vector<Gaussian3D> survivors;
    survivors.reserve(gaussians.size());
    for (size_t i = 0; i < gaussians.size(); ++i) {
        if (sigmoid(gaussians[i].opacity_logit) >= opacity_threshold) {
            res.kept.push_back(static_cast<int>(i));
            survivors.push_back(gaussians[i]);
        }
    }
    res.removed = static_cast<int>(gaussians.size() - survivors.size());
    gaussians = std::move(survivors);
    return res;
}

/// Compact bundle + Adam moments after a prune so surviving Gaussians keep
/// their optimizer state; enhancer segments are preserved untouched.
inline void remap_after_prune(const PruneResult& pr, ParamBundle& params, AdamState& state) {
    BundleLayout nl = params.layout;
    nl.n_gaussians = static_cast<int>(pr.kept.size());
    ParamBundle np(nl);
    AdamState ns = state;
    ns.m.assign(nl.total(), 0.0);
    ns.v.assign(nl.total(), 0.0);
    for (size_t ni = 0; ni < pr.kept.size(); ++ni) {
        const size_t oi = static_cast<size_t>(pr.kept[ni]);
        for (int k = 0; k < kGaussianParams; ++k) {
            np.values[ni * kGaussianParams + k] = params.values[oi * kGaussianParams + k];
            ns.m[ni * kGaussianParams + k] = state.m[oi * kGaussianParams + k];
            ns.v[ni * kGaussianParams + k] = state.v[oi * kGaussianParams + k];
        }
    }
    const size_t old_off = params.layout.gaussian_block();
    const size_t new_off = nl.gaussian_block();
    const size_t enh_len = params.values.size() - old_off;
    for (size_t k = 0; k < enh_len; ++k) {
        np.values[new_off + k] = params.values[old_off + k];
        ns.m[new_off + k] = state.m[old_off + k];
        ns.v[new_off + k] = state.v[old_off + k];
    }
    params = std::move(np);
    state = std::move(ns);
}

}  // namespace dtgs
