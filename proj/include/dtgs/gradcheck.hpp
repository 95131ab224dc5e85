#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dtgs/trainer.hpp"

namespace dtgs {

struct GradCheckConfig {
    std::uint64_t seed = 0;
    int n_gaussians = 5;
    int width = 24, height = 24;
    double h = 1e-5;
    double tolerance = 1e-4;
    bool corrupt_hook = false;  // deliberately breaks one analytic entry (self-test)
};

struct GradCheckReport {
    struct ClassStat {
        std::string name;
        double max_rel = 0.0;
        double mean_rel = 0.0;
        size_t count = 0;
    };
    std::vector<ClassStat> classes;
    double max_rel = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Relative error with an absolute floor: coordinates smaller than the floor are
/// compared absolutely (central differences carry ~1e-10 noise of their own).
inline double gradcheck_rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

/// Deterministic random fixture covering every gradient path: Gaussians in
/// front of an orbit camera, a dark input, smooth thermal, random fixed GT.
struct GradCheckFixture {
    std::vector<Gaussian3D> gaussians;
    Camera camera;
    ImageRGB i_low;
    ImageGray thermal;
    ImageRGB gt_fixed;
    EnhancerParams enhancer;
    RunConfig cfg;
    LossWeights lambda;
    ViewLossFlags flags;
};

inline GradCheckFixture make_gradcheck_fixture(std::uint64_t seed, int n_gaussians, int width,
                                               int height) {
    Rng rng(seed * 7919ULL + 17ULL);
    GradCheckFixture f;
    f.camera = make_lookat_camera(Vec3(3.0, 0.6, 1.2), Vec3(0, 0, 0.2), 55.0, width, height);
    for (int i = 0; i < n_gaussians; ++i) {
        Gaussian3D g;
        g.position = Vec3(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7), rng.uniform(-0.5, 0.9));
        g.log_scale = Vec3(std::log(rng.uniform(0.15, 0.45)), std::log(rng.uniform(0.15, 0.45)),
                           std::log(rng.uniform(0.15, 0.45)));
        Vec4 q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        g.rotation = q.normalized();
        g.opacity_logit = rng.uniform(-1.2, 1.2);
        g.color_raw = Vec3(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
        f.gaussians.push_back(g);
    }
    f.i_low = ImageRGB(width, height);
    for (double& v : f.i_low.data) v = rng.uniform(0.01, 0.2);
    f.thermal = ImageGray(width, height);
    for (double& v : f.thermal.data) v = rng.uniform(0.05, 0.95);
    f.gt_fixed = ImageRGB(width, height);
    for (double& v : f.gt_fixed.data) v = rng.uniform(0.05, 0.95);

    // Illumination kept above the input range so the reflectance clamp stays
    // inactive; the clamp branch has its own dedicated unit check.
    f.enhancer = EnhancerParams::make(6, 5, 0.5);
    for (double& v : f.enhancer.log_grid) v = rng.uniform(-1.4, -0.1);
    f.enhancer.gamma_raw = softplus_inverse(rng.uniform(1.6, 2.8));

    f.cfg.threads = 1;
    f.cfg.grid_h = f.enhancer.grid_h;
    f.cfg.grid_w = f.enhancer.grid_w;
    f.lambda = normalize_weights(0.1, 0.9, 0.2);
    return f;
}

/// Full-pipeline finite-difference check: the composed per-view loss (enhancer,
/// renderer, thermal and reconstruction terms) against central differences for
/// every raw parameter, reported per parameter class.
inline GradCheckReport run_gradcheck(const GradCheckConfig& gc) {
    if (gc.h == 0.0) throw ValidationError("gradcheck: finite-difference step must be nonzero");
    if (gc.n_gaussians > 200)
        throw ValidationError("gradcheck: scene too large for finite differencing (max 200)");

    GradCheckFixture f = make_gradcheck_fixture(gc.seed, gc.n_gaussians, gc.width, gc.height);

    GradBundle analytic(BundleLayout{static_cast<int>(f.gaussians.size()), 1, f.enhancer.grid_h,
                                     f.enhancer.grid_w});
    compute_view_loss(f.gaussians, f.camera, f.i_low, f.thermal, f.gt_fixed, f.enhancer, f.cfg,
                      f.lambda, f.flags, &analytic, 0);
    if (gc.corrupt_hook && !analytic.values.empty()) analytic.values[0] += 1e-3;

    ParamBundle base = gather_params(f.gaussians, {f.enhancer});
    auto eval_total = [&](const std::vector<double>& values) {
        ParamBundle b = base;
        b.values = values;
        std::vector<Gaussian3D> gs = f.gaussians;
        std::vector<EnhancerParams> enh = {f.enhancer};
        scatter_params(b, gs, enh);
        return compute_view_loss(gs, f.camera, f.i_low, f.thermal, f.gt_fixed, enh[0], f.cfg,
                                 f.lambda, f.flags, nullptr, 0)
            .total;
    };

    GradCheckReport rep;
    rep.tolerance = gc.tolerance;
    rep.classes.resize(kNumParamClasses);
    for (int k = 0; k < kNumParamClasses; ++k)
        rep.classes[k].name = param_class_name(static_cast<ParamClass>(k));

    std::vector<double> values = base.values;
    for (size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + gc.h;
        const double fp = eval_total(values);
        values[i] = saved - gc.h;
        const double fm = eval_total(values);
        values[i] = saved;
        const double fd = (fp - fm) / (2.0 * gc.h);
        const double rel = gradcheck_rel_err(analytic.values[i], fd);
        auto& cls = rep.classes[static_cast<int>(base.layout.class_of(i))];
        cls.max_rel = std::max(cls.max_rel, rel);
        cls.mean_rel += rel;
        cls.count += 1;
        rep.max_rel = std::max(rep.max_rel, rel);
    }
    for (auto& c : rep.classes)
        if (c.count) c.mean_rel /= static_cast<double>(c.count);
    rep.pass = rep.max_rel <= gc.tolerance;
    return rep;
}

}  // namespace dtgs
