#pragma once

#include <string>
#include <vector>

#include "dtgs/trainer.hpp"

namespace dtgs {

/// Enhancer trained standalone on its own loss (no rendering in the loop); this
/// is the "enhancement as preprocessing" baseline.
inline EnhancerParams pretrain_enhancer(const ImageRGB& i_low, const RunConfig& cfg,
                                        int iters = 400) {
    std::vector<EnhancerParams> p = {EnhancerParams::init_from_image(
        i_low, cfg.grid_h, cfg.grid_w, cfg.exposure_target, cfg.gamma_eff_init)};
    std::vector<Gaussian3D> no_gaussians;
    const BundleLayout layout{0, 1, cfg.grid_h, cfg.grid_w};
    AdamState adam = AdamState::for_layout(layout);
    for (int t = 0; t < iters; ++t) {
        const EnhancerEval eval = enhance_eval(i_low, p[0]);
        const EnhancementLossResult el = enhancement_loss(i_low, p[0], eval, cfg.enh_weights);
        GradBundle g(layout);
        double* slot = g.enhancer_slot(0);
        for (size_t k = 0; k < el.grad.grid.size(); ++k) slot[k] = el.grad.grid[k];
        slot[el.grad.grid.size()] = el.grad.gamma_raw;
        ParamBundle b = gather_params(no_gaussians, p);
        adam_step(b, g, adam, cosine_lr(t, cfg.base_lr, cfg.lr_period), cfg.lr_mult);
        scatter_params(b, no_gaussians, p);
    }
    return p[0];
}

struct AblationRow {
    std::string variant;
    std::string scene;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

inline const std::vector<std::string>& ablation_variants() {
    static const std::vector<std::string> v = {"full", "no_cyclic", "no_thermal", "pre_enhance"};
    return v;
}

/// Train one ablation variant from scratch and score the hold-out views against
/// bright GT.
inline AblationRow run_ablation_variant(const RunConfig& base, const LoadedScene& scene,
                                        const std::string& scene_name, const std::string& variant) {
    RunConfig cfg = base;
    cfg.out_dir = base.out_dir + "/" + variant;
    if (variant == "no_cyclic") {
        cfg.disable_cyclic = true;
    } else if (variant == "no_thermal") {
        cfg.disable_thermal = true;
    } else if (variant == "pre_enhance") {
        cfg.disable_cyclic = true;
        cfg.disable_thermal = true;
    } else if (variant != "full") {
        throw ValidationError("ablate: unknown variant '" + variant + "'");
    }

    TrainingSession s = TrainingSession::create(cfg, scene);
    if (variant == "pre_enhance") {
        std::vector<ImageRGB> targets;
        for (size_t slot = 0; slot < s.train_views.size(); ++slot) {
            s.enhancers[slot] = pretrain_enhancer(s.frames[s.train_views[slot]].rgb_low, cfg);
            targets.push_back(enhance(s.frames[s.train_views[slot]].rgb_low, s.enhancers[slot]));
        }
        s.freeze_enhancer(true);
        s.override_supervision(targets);
    }
    run_training(s, /*write_outputs=*/false);

    const MetricReport rep = evaluate_views(s, s.holdout_views, scene_name);
    AblationRow row;
    row.variant = variant;
    row.scene = scene_name;
    row.psnr_db = rep.mean_psnr();
    row.ssim = rep.mean_ssim();
    return row;
}

inline std::vector<AblationRow> run_ablation(const RunConfig& base, const LoadedScene& scene,
                                             const std::string& scene_name) {
    std::vector<AblationRow> rows;
    for (const auto& v : ablation_variants())
        rows.push_back(run_ablation_variant(base, scene, scene_name, v));
    return rows;
}

}  // namespace dtgs
