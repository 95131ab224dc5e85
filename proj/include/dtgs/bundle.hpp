#pragma once

#include <vector>

#include "dtgs/gaussian.hpp"
#include "dtgs/math.hpp"
#include "dtgs/retinex.hpp"

namespace dtgs {

enum class ParamClass : int {
    Position = 0,
    LogScale = 1,
    Rotation = 2,
    Opacity = 3,
    Color = 4,
    EnhGrid = 5,
    EnhGamma = 6,
};
inline constexpr int kNumParamClasses = 7;
inline constexpr int kGaussianParams = 14;  // pos 3 + log_scale 3 + quat 4 + opacity 1 + color 3

inline const char* param_class_name(ParamClass c) {
    switch (c) {
        case ParamClass::Position: return "position";
        case ParamClass::LogScale: return "log_scale";
        case ParamClass::Rotation: return "rotation";
        case ParamClass::Opacity: return "opacity";
        case ParamClass::Color: return "color";
        case ParamClass::EnhGrid: return "enh_grid";
        default: return "enh_gamma";
    }
}

/// Stable flat indexing over all Gaussian parameters and all per-view enhancer
/// parameters. Gaussians first (14 slots each), then one segment per enhancer
/// (grid cells followed by the raw exponent).
struct BundleLayout {
    int n_gaussians = 0;
    int n_views = 0;
    int grid_h = 0;
    int grid_w = 0;

    size_t gaussian_block() const { return static_cast<size_t>(n_gaussians) * kGaussianParams; }
    size_t enhancer_stride() const { return static_cast<size_t>(grid_h) * grid_w + 1; }
    size_t enhancer_offset(int view) const { return gaussian_block() + view * enhancer_stride(); }
    size_t total() const { return gaussian_block() + static_cast<size_t>(n_views) * enhancer_stride(); }

    ParamClass class_of(size_t idx) const {
        if (idx < gaussian_block()) {
            const int r = static_cast<int>(idx % kGaussianParams);
            if (r < 3) return ParamClass::Position;
            if (r < 6) return ParamClass::LogScale;
            if (r < 10) return ParamClass::Rotation;
            if (r == 10) return ParamClass::Opacity;
            return ParamClass::Color;
        }
        const size_t rel = (idx - gaussian_block()) % enhancer_stride();
        return rel + 1 == enhancer_stride() ? ParamClass::EnhGamma : ParamClass::EnhGrid;
    }

    bool operator==(const BundleLayout&) const = default;
};

/// Flat view over all trainable parameters; gradients share the same shape.
struct FlatBundle {
    BundleLayout layout;
    std::vector<double> values;

    explicit FlatBundle(const BundleLayout& l = {}) : layout(l), values(l.total(), 0.0) {}

    double* gaussian_slot(int i) { return values.data() + static_cast<size_t>(i) * kGaussianParams; }
    const double* gaussian_slot(int i) const {
        return values.data() + static_cast<size_t>(i) * kGaussianParams;
    }
    double* enhancer_slot(int v) { return values.data() + layout.enhancer_offset(v); }
    const double* enhancer_slot(int v) const { return values.data() + layout.enhancer_offset(v); }

    void fill(double v) { std::fill(values.begin(), values.end(), v); }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

using ParamBundle = FlatBundle;
using GradBundle = FlatBundle;

inline void write_gaussian_slot(double* s, const Gaussian3D& g) {
    s[0] = g.position.x();
    s[1] = g.position.y();
    s[2] = g.position.z();
    s[3] = g.log_scale.x();
    s[4] = g.log_scale.y();
    s[5] = g.log_scale.z();
    s[6] = g.rotation[0];
    s[7] = g.rotation[1];
    s[8] = g.rotation[2];
    s[9] = g.rotation[3];
    s[10] = g.opacity_logit;
    s[11] = g.color_raw.x();
    s[12] = g.color_raw.y();
    s[13] = g.color_raw.z();
}

inline Gaussian3D read_gaussian_slot(const double* s) {
    Gaussian3D g;
    g.position = Vec3(s[0], s[1], s[2]);
    g.log_scale = Vec3(s[3], s[4], s[5]);
    g.rotation = Vec4(s[6], s[7], s[8], s[9]);
    g.opacity_logit = s[10];
    g.color_raw = Vec3(s[11], s[12], s[13]);
    return g;
}

inline ParamBundle gather_params(const std::vector<Gaussian3D>& gaussians,
                                 const std::vector<EnhancerParams>& enhancers) {
    BundleLayout layout;
    layout.n_gaussians = static_cast<int>(gaussians.size());
    layout.n_views = static_cast<int>(enhancers.size());
    if (!enhancers.empty()) {
        layout.grid_h = enhancers[0].grid_h;
        layout.grid_w = enhancers[0].grid_w;
    }
    ParamBundle b(layout);
    for (size_t i = 0; i < gaussians.size(); ++i)
        write_gaussian_slot(b.gaussian_slot(static_cast<int>(i)), gaussians[i]);
    for (size_t v = 0; v < enhancers.size(); ++v) {
        double* s = b.enhancer_slot(static_cast<int>(v));
        for (size_t k = 0; k < enhancers[v].log_grid.size(); ++k) s[k] = enhancers[v].log_grid[k];
        s[enhancers[v].log_grid.size()] = enhancers[v].gamma_raw;
    }
    return b;
}

inline void scatter_params(const ParamBundle& b, std::vector<Gaussian3D>& gaussians,
                           std::vector<EnhancerParams>& enhancers) {
    if (static_cast<int>(gaussians.size()) != b.layout.n_gaussians ||
        static_cast<int>(enhancers.size()) != b.layout.n_views)
        throw ValidationError("scatter_params: bundle layout does not match targets");
    for (size_t i = 0; i < gaussians.size(); ++i)
        gaussians[i] = read_gaussian_slot(b.gaussian_slot(static_cast<int>(i)));
    for (size_t v = 0; v < enhancers.size(); ++v) {
        const double* s = b.enhancer_slot(static_cast<int>(v));
        for (size_t k = 0; k < enhancers[v].log_grid.size(); ++k) enhancers[v].log_grid[k] = s[k];
        enhancers[v].gamma_raw = s[enhancers[v].log_grid.size()];
    }
}

}  // namespace dtgs
