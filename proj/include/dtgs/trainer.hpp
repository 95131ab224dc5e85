#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtgs/bundle.hpp"
#include "dtgs/checkpoint.hpp"
#include "dtgs/dataset.hpp"
#include "dtgs/metrics.hpp"
#include "dtgs/optimizer.hpp"
#include "dtgs/renderer.hpp"
#include "dtgs/retinex.hpp"
#include "dtgs/scene_io.hpp"
#include "dtgs/schedule.hpp"
#include "dtgs/thermal.hpp"

namespace dtgs {

/// Everything one training run needs; flat JSON on disk, CLI flags override.
struct RunConfig {
    std::string scene_dir;
    Json generator;  // inline synthetic-scene spec if no scene_dir

    int iterations = 2000;
    int t_transition = 8000;
    double lambda_initial[3] = {0.1, 0.9, 0.2};  // raw (enh, gs, therm)
    double lambda_final[3] = {0.1, 0.9, 0.2};
    std::string schedule_mode = "four_stage";  // or "three_stage"
    double breakpoints[3] = {0.2, 0.4, 0.7};
    double gamma_thermal = 0.1;
    GsLossWeights gs_weights;
    EnhancementLossWeights enh_weights;
    double exposure_target = 0.5;
    int grid_h = 16, grid_w = 12;
    double gamma_eff_init = 2.2;

    double base_lr = 1e-3;
    int lr_period = 5000;
    bool lr_single_cosine = false;
    LrMultipliers lr_mult;
    int prune_interval = 1000;
    double prune_opacity = 0.005;
    int max_init_points = 0;  // 0 = use the whole point cloud

    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int holdout_every = 8;
    double background[3] = {0.0, 0.0, 0.0};
    std::string view_sampling = "round_robin";  // or "random"
    int threads = 0;
    int checkpoint_interval = 0;  // 0 = final checkpoint only
    bool validate_gt = false;

    bool disable_cyclic = false;
    bool disable_thermal = false;
    bool disable_enhancer = false;

    ScheduleConfig schedule_config() const {
        ScheduleConfig sc;
        for (int k = 0; k < 3; ++k) {
            sc.initial[k] = lambda_initial[k];
            sc.final_[k] = lambda_final[k];
            sc.breakpoints[k] = breakpoints[k];
        }
        sc.total_iters = iterations;
        sc.mode = schedule_mode == "three_stage" ? ScheduleMode::ThreeStage : ScheduleMode::FourStage;
        return sc;
    }

    Vec3 background_color() const { return Vec3(background[0], background[1], background[2]); }

    void validate() const {
        if (iterations <= 0) throw ValidationError("config: iterations must be positive");
        if (t_transition <= 0) throw ValidationError("config: t_transition must be positive");
        if (!(gamma_thermal >= 0.0 && gamma_thermal <= 1.0))
            throw ValidationError("config: gamma_thermal must be in [0,1]");
        if (!(base_lr > 0.0)) throw ValidationError("config: base_lr must be positive");
        if (lr_period <= 0) throw ValidationError("config: lr_period must be positive");
        if (grid_h < 2 || grid_w < 2) throw ValidationError("config: enhancer grid too small");
        if (holdout_every < 2) throw ValidationError("config: holdout_every must be >= 2");
        if (schedule_mode != "four_stage" && schedule_mode != "three_stage")
            throw ValidationError("config: unknown schedule_mode '" + schedule_mode + "'");
        if (view_sampling != "round_robin" && view_sampling != "random")
            throw ValidationError("config: unknown view_sampling '" + view_sampling + "'");
        normalize_weights(lambda_initial[0], lambda_initial[1], lambda_initial[2]);
        normalize_weights(lambda_final[0], lambda_final[1], lambda_final[2]);
        schedule_config();  // validates breakpoints
    }
};

inline RunConfig run_config_from_json(const Json& j) {
    RunConfig c;
    c.scene_dir = j.value("scene_dir", std::string());
    if (j.contains("generator")) c.generator = j["generator"];
    c.iterations = j.value("iterations", c.iterations);
    c.t_transition = j.value("t_transition", c.t_transition);
    if (j.contains("lambda_initial"))
        for (int k = 0; k < 3; ++k) c.lambda_initial[k] = j["lambda_initial"][k].get<double>();
    if (j.contains("lambda_final"))
        for (int k = 0; k < 3; ++k) c.lambda_final[k] = j["lambda_final"][k].get<double>();
    c.schedule_mode = j.value("schedule_mode", c.schedule_mode);
    if (j.contains("breakpoints"))
        for (int k = 0; k < 3; ++k) c.breakpoints[k] = j["breakpoints"][k].get<double>();
    c.gamma_thermal = j.value("gamma_thermal", c.gamma_thermal);
    if (j.contains("gs_weights")) {
        const Json& g = j["gs_weights"];
        c.gs_weights.l1 = g.value("l1", c.gs_weights.l1);
        c.gs_weights.ssim = g.value("ssim", c.gs_weights.ssim);
        c.gs_weights.corner = g.value("corner", c.gs_weights.corner);
        c.gs_weights.consistency = g.value("consistency", c.gs_weights.consistency);
    }
    if (j.contains("enh_weights")) {
        const Json& g = j["enh_weights"];
        c.enh_weights.reconstruction = g.value("reconstruction", c.enh_weights.reconstruction);
        c.enh_weights.smoothness = g.value("smoothness", c.enh_weights.smoothness);
        c.enh_weights.exposure = g.value("exposure", c.enh_weights.exposure);
        c.enh_weights.edge_beta = g.value("edge_beta", c.enh_weights.edge_beta);
    }
    c.exposure_target = j.value("exposure_target", c.exposure_target);
    c.grid_h = j.value("grid_h", c.grid_h);
    c.grid_w = j.value("grid_w", c.grid_w);
    c.gamma_eff_init = j.value("gamma_eff_init", c.gamma_eff_init);
    c.base_lr = j.value("base_lr", c.base_lr);
    c.lr_period = j.value("lr_period", c.lr_period);
    c.lr_single_cosine = j.value("lr_single_cosine", c.lr_single_cosine);
    if (j.contains("lr_mult")) {
        const Json& m = j["lr_mult"];
        const char* names[kNumParamClasses] = {"position", "log_scale", "rotation",
                                               "opacity", "color", "enh_grid", "enh_gamma"};
        for (int k = 0; k < kNumParamClasses; ++k)
            c.lr_mult.values[k] = m.value(names[k], c.lr_mult.values[k]);
    }
    c.prune_interval = j.value("prune_interval", c.prune_interval);
    c.prune_opacity = j.value("prune_opacity", c.prune_opacity);
    c.max_init_points = j.value("max_init_points", c.max_init_points);
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.holdout_every = j.value("holdout_every", c.holdout_every);
    if (j.contains("background"))
        for (int k = 0; k < 3; ++k) c.background[k] = j["background"][k].get<double>();
    c.view_sampling = j.value("view_sampling", c.view_sampling);
    c.threads = j.value("threads", c.threads);
    c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
    c.validate_gt = j.value("validate_gt", c.validate_gt);
    c.disable_cyclic = j.value("disable_cyclic", c.disable_cyclic);
    c.disable_thermal = j.value("disable_thermal", c.disable_thermal);
    c.disable_enhancer = j.value("disable_enhancer", c.disable_enhancer);
    return c;
}

inline Json run_config_to_json(const RunConfig& c) {
    Json j;
    j["scene_dir"] = c.scene_dir;
    if (!c.generator.is_null()) j["generator"] = c.generator;
    j["iterations"] = c.iterations;
    j["t_transition"] = c.t_transition;
    j["lambda_initial"] = {c.lambda_initial[0], c.lambda_initial[1], c.lambda_initial[2]};
    j["lambda_final"] = {c.lambda_final[0], c.lambda_final[1], c.lambda_final[2]};
    j["schedule_mode"] = c.schedule_mode;
    j["breakpoints"] = {c.breakpoints[0], c.breakpoints[1], c.breakpoints[2]};
    j["gamma_thermal"] = c.gamma_thermal;
    j["gs_weights"] = {{"l1", c.gs_weights.l1},
                       {"ssim", c.gs_weights.ssim},
                       {"corner", c.gs_weights.corner},
                       {"consistency", c.gs_weights.consistency}};
    j["enh_weights"] = {{"reconstruction", c.enh_weights.reconstruction},
                        {"smoothness", c.enh_weights.smoothness},
                        {"exposure", c.enh_weights.exposure},
                        {"edge_beta", c.enh_weights.edge_beta}};
    j["exposure_target"] = c.exposure_target;
    j["grid_h"] = c.grid_h;
    j["grid_w"] = c.grid_w;
    j["gamma_eff_init"] = c.gamma_eff_init;
    j["base_lr"] = c.base_lr;
    j["lr_period"] = c.lr_period;
    j["lr_single_cosine"] = c.lr_single_cosine;
    const char* names[kNumParamClasses] = {"position", "log_scale", "rotation",
                                           "opacity", "color", "enh_grid", "enh_gamma"};
    for (int k = 0; k < kNumParamClasses; ++k) j["lr_mult"][names[k]] = c.lr_mult.values[k];
    j["prune_interval"] = c.prune_interval;
    j["prune_opacity"] = c.prune_opacity;
    j["max_init_points"] = c.max_init_points;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["holdout_every"] = c.holdout_every;
    j["background"] = {c.background[0], c.background[1], c.background[2]};
    j["view_sampling"] = c.view_sampling;
    j["threads"] = c.threads;
    j["checkpoint_interval"] = c.checkpoint_interval;
    j["validate_gt"] = c.validate_gt;
    j["disable_cyclic"] = c.disable_cyclic;
    j["disable_thermal"] = c.disable_thermal;
    j["disable_enhancer"] = c.disable_enhancer;
    return j;
}

/// Hash of the fields that affect the training math; stored in checkpoints so a
/// resume under different settings warns instead of silently diverging.
inline std::uint64_t config_hash(const RunConfig& c) {
    Json j = run_config_to_json(c);
    j.erase("out_dir");
    j.erase("threads");
    j.erase("checkpoint_interval");
    j.erase("validate_gt");
    return fnv1a64(j.dump());
}

/// Per-view loss evaluation shared by the trainer and the gradient checker, so
/// the checked path is the trained path. `gt` is the (already updated, frozen)
/// supervision target.
struct ViewLossResult {
    double l_enh = 0.0;
    double l_gs = 0.0;
    double l_therm = 0.0;
    double total = 0.0;
    ImageRGB i_enh;
};

struct ViewLossFlags {
    bool enhancer_enabled = true;  // false: I_enh = I_low, no enhancer loss/grads
    bool enhancer_frozen = false;  // true: I_enh from current params, no grads
    bool thermal_enabled = true;
};

inline ViewLossResult compute_view_loss(const std::vector<Gaussian3D>& gaussians, const Camera& cam,
                                        const ImageRGB& i_low, const ImageGray& thermal,
                                        const ImageRGB& gt, const EnhancerParams& enhancer,
                                        const RunConfig& cfg, const LossWeights& lambda,
                                        const ViewLossFlags& flags, GradBundle* grads, int enh_slot,
                                        ImageRGB* rendered_out = nullptr) {
    ViewLossResult res;

    EnhancerEval eval;
    if (flags.enhancer_enabled) {
        eval = enhance_eval(i_low, enhancer);
        res.i_enh = eval.i_enh;
    } else {
        res.i_enh = i_low;
    }

    const bool want_enh_grads = grads && flags.enhancer_enabled && !flags.enhancer_frozen;
    EnhancerGrad enh_grad(enhancer.log_grid.size());
    if (flags.enhancer_enabled && !flags.enhancer_frozen) {
        EnhancementLossResult el = enhancement_loss(i_low, enhancer, eval, cfg.enh_weights);
        res.l_enh = el.value;
        enh_grad.add_scaled(el.grad, lambda.enh);
    }

    const RenderOutput out =
        render(gaussians, cam, cfg.background_color(), grads != nullptr, cfg.threads);
    if (rendered_out) *rendered_out = out.color;

    GsLossWeights gw = cfg.gs_weights;
    if (!flags.thermal_enabled) gw.consistency = 0.0;
    const GsLossResult gs = gs_loss(out.color, gt, thermal, gw);
    res.l_gs = gs.value;

    ThermalLossResult th;
    if (flags.thermal_enabled) {
        th = thermal_loss(res.i_enh, out.color, thermal, cfg.gamma_thermal);
        res.l_therm = th.value;
    }

    res.total = total_loss({res.l_enh, res.l_gs, res.l_therm}, lambda);

    if (grads) {
        ImageRGB d_rendered(out.color.width, out.color.height, 0.0);
        for (size_t i = 0; i < d_rendered.data.size(); ++i) {
            double v = lambda.gs * gs.d_rendered.data[i];
            if (flags.thermal_enabled) v += lambda.therm * th.d_rendered.data[i];
            d_rendered.data[i] = v;
        }
        render_backward(gaussians, cam, out, d_rendered, *grads, cfg.threads);

        if (want_enh_grads) {
            if (flags.thermal_enabled) {
                const EnhancerGrad th_grad = enhancer_backward(i_low, enhancer, eval, th.d_enhanced);
                enh_grad.add_scaled(th_grad, lambda.therm);
            }
            double* slot = grads->enhancer_slot(enh_slot);
            for (size_t k = 0; k < enh_grad.grid.size(); ++k) slot[k] += enh_grad.grid[k];
            slot[enh_grad.grid.size()] += enh_grad.gamma_raw;
        }
    }
    return res;
}

/// One CSV row of the per-iteration log.
struct IterationLog {
    int t = 0;
    int view = 0;
    double alpha = 0.0;
    LossWeights lambda;
    double l_enh = 0.0, l_gs = 0.0, l_therm = 0.0, total = 0.0;
    double lr = 0.0;
};

inline std::string log_csv_header() {
    return "t,view,alpha,lambda_enh,lambda_gs,lambda_therm,loss_enh,loss_gs,loss_therm,loss_total,lr";
}

inline std::string log_csv_row(const IterationLog& l) {
    std::ostringstream os;
    os.precision(17);
    os << l.t << ',' << l.view << ',' << l.alpha << ',' << l.lambda.enh << ',' << l.lambda.gs << ','
       << l.lambda.therm << ',' << l.l_enh << ',' << l.l_gs << ',' << l.l_therm << ',' << l.total
       << ',' << l.lr;
    return os.str();
}

/// Owns all mutable training state for one run; step() advances one iteration
/// of the cyclic loop (enhance -> update GT -> render -> losses -> backward ->
/// Adam).
class TrainingSession {
public:
    RunConfig cfg;
    std::vector<MultiViewFrame> frames;
    std::vector<int> train_views;    // frame indices
    std::vector<int> holdout_views;  // frame indices
    std::vector<Gaussian3D> gaussians;
    std::vector<EnhancerParams> enhancers;       // one per train view
    std::vector<SupervisionState> supervision;   // one per train view
    AdamState adam;
    Rng rng;
    int iteration = 0;

    // invariant bookkeeping (always cheap; pixel bound checks only if validate_gt)
    long gt_bound_violations = 0;
    bool alpha_nondecreasing = true;
    double last_alpha = -1.0;

    static TrainingSession create(const RunConfig& cfg, const LoadedScene& scene) {
        cfg.validate();
        TrainingSession s;
        s.cfg = cfg;
        s.frames = scene.frames;
        s.split_views();
        PointCloud points = scene.points;
        if (points.positions.empty())
            throw ValidationError("training: scene has no init point cloud (points.json)");
        if (cfg.max_init_points > 0 &&
            points.positions.size() > static_cast<size_t>(cfg.max_init_points)) {
            points.positions.resize(cfg.max_init_points);
            points.colors.resize(cfg.max_init_points);
        }
        s.gaussians = init_gaussians(points);
        for (const int v : s.train_views) {
            s.enhancers.push_back(EnhancerParams::init_from_image(
                s.frames[v].rgb_low, cfg.grid_h, cfg.grid_w, cfg.exposure_target, cfg.gamma_eff_init));
            s.supervision.push_back(
                SupervisionState::init_from(s.frames[v].rgb_low, cfg.t_transition));
        }
        s.adam = AdamState::for_layout(s.layout());
        s.rng = Rng(cfg.seed);
        return s;
    }

    static TrainingSession resume(const RunConfig& cfg, const LoadedScene& scene,
                                  const CheckpointData& ck) {
        cfg.validate();
        TrainingSession s;
        s.cfg = cfg;
        s.frames = scene.frames;
        s.split_views();
        if (s.train_views != ck.train_view_ids)
            throw ValidationError("resume: checkpoint train split does not match the scene/config");
        s.gaussians = ck.gaussians;
        s.enhancers = ck.enhancers;
        s.supervision = ck.supervision;
        s.adam = ck.adam;
        s.rng = Rng(0);
        s.rng.set_state(ck.rng_state);
        s.iteration = ck.iteration;
        return s;
    }

    BundleLayout layout() const {
        return BundleLayout{static_cast<int>(gaussians.size()), static_cast<int>(enhancers.size()),
                            cfg.grid_h, cfg.grid_w};
    }

    CheckpointData snapshot() const {
        CheckpointData d;
        d.iteration = iteration;
        d.gaussians = gaussians;
        d.enhancers = enhancers;
        d.adam = adam;
        d.supervision = supervision;
        d.train_view_ids = train_views;
        d.rng_state = rng.state();
        d.config_hash = config_hash(cfg);
        return d;
    }

    IterationLog step() {
        const int t = iteration;
        const int slot = pick_view_slot(t);
        const int view = train_views[slot];
        const MultiViewFrame& frame = frames[view];

        ViewLossFlags flags;
        flags.enhancer_enabled = !cfg.disable_enhancer;
        flags.enhancer_frozen = enhancer_frozen_;
        flags.thermal_enabled = !cfg.disable_thermal;

        // Enhance, then refresh this view's supervision target.
        const double alpha = cfg.disable_cyclic ? 0.0 : alpha_blend(t, cfg.t_transition);
        if (last_alpha >= 0.0 && alpha < last_alpha && !cfg.disable_cyclic)
            alpha_nondecreasing = false;
        last_alpha = cfg.disable_cyclic ? last_alpha : alpha;

        ImageRGB i_enh =
            flags.enhancer_enabled ? enhance(frame.rgb_low, enhancers[slot]) : frame.rgb_low;
        SupervisionState& sup = supervision[slot];
        if (cfg.validate_gt) {
            const ImageRGB prev = sup.gt_current;
            blend_gt(sup, i_enh, alpha);
            for (size_t i = 0; i < prev.data.size(); ++i) {
                const double lo = std::min(prev.data[i], i_enh.data[i]) - 1e-12;
                const double hi = std::max(prev.data[i], i_enh.data[i]) + 1e-12;
                if (sup.gt_current.data[i] < lo || sup.gt_current.data[i] > hi)
                    ++gt_bound_violations;
            }
        } else {
            blend_gt(sup, i_enh, alpha);
        }
        sup.iteration = t;

        LossWeights lambda = lambda_schedule(t, cfg.schedule_config());
        if (cfg.disable_thermal) lambda = normalize_weights(lambda.enh, lambda.gs, 0.0);
        if (cfg.disable_enhancer || enhancer_frozen_) lambda = normalize_weights(0.0, lambda.gs, lambda.therm);

        GradBundle grads(layout());
        const ViewLossResult res =
            compute_view_loss(gaussians, frame.camera, frame.rgb_low, frame.thermal, sup.gt_current,
                              enhancers[slot], cfg, lambda, flags, &grads, slot);
        if (!std::isfinite(res.total))
            throw NumericalError("train: non-finite total loss at iteration " + std::to_string(t));

        const double lr = cfg.lr_single_cosine ? cosine_lr_single(t, cfg.base_lr, cfg.lr_period)
                                               : cosine_lr(t, cfg.base_lr, cfg.lr_period);
        ParamBundle params = gather_params(gaussians, enhancers);
        adam_step(params, grads, adam, lr, cfg.lr_mult);
        scatter_params(params, gaussians, enhancers);

        iteration = t + 1;
        if (cfg.prune_interval > 0 && iteration % cfg.prune_interval == 0) run_prune();

        IterationLog log;
        log.t = t;
        log.view = view;
        log.alpha = alpha;
        log.lambda = lambda;
        log.l_enh = res.l_enh;
        log.l_gs = res.l_gs;
        log.l_therm = res.l_therm;
        log.total = res.total;
        log.lr = lr;
        return log;
    }

    /// Render one frame with the current Gaussians.
    ImageRGB render_view(int frame_index) const {
        return render(gaussians, frames[frame_index].camera, cfg.background_color(), false,
                      cfg.threads)
            .color;
    }

    /// Current enhanced image of a train-view slot.
    ImageRGB enhanced_view(int slot) const {
        const int v = train_views[slot];
        return cfg.disable_enhancer ? frames[v].rgb_low : enhance(frames[v].rgb_low, enhancers[slot]);
    }

    void freeze_enhancer(bool frozen) { enhancer_frozen_ = frozen; }

    /// Replace every supervision target (used by the pre-enhance ablation).
    void override_supervision(const std::vector<ImageRGB>& targets) {
        if (targets.size() != supervision.size())
            throw ValidationError("override_supervision: wrong target count");
        for (size_t i = 0; i < targets.size(); ++i) supervision[i].gt_current = targets[i];
    }

private:
    bool enhancer_frozen_ = false;

    void split_views() {
        if (frames.size() < 2) throw ValidationError("training: need at least 2 views");
        for (size_t i = 0; i < frames.size(); ++i) {
            if (cfg.holdout_every > 0 && i % static_cast<size_t>(cfg.holdout_every) == 0 &&
                frames.size() > 2)
                holdout_views.push_back(static_cast<int>(i));
            else
                train_views.push_back(static_cast<int>(i));
        }
        if (train_views.empty()) throw ValidationError("training: hold-out split left no train views");
    }

    int pick_view_slot(int t) {
        if (cfg.view_sampling == "random")
            return static_cast<int>(rng.uniform_index(train_views.size()));
        return t % static_cast<int>(train_views.size());
    }

    void run_prune() {
        const PruneResult pr = prune(gaussians, cfg.prune_opacity);
        if (pr.removed == 0) return;
        BundleLayout old_layout = layout();
        old_layout.n_gaussians += pr.removed;
        ParamBundle dummy(old_layout);  // moments are what must survive the remap
        remap_after_prune(pr, dummy, adam);
    }
};

/// Render the listed frames and score them against bright GT when present,
/// else against the supplied supervision targets.
inline MetricReport evaluate_views(const TrainingSession& s, const std::vector<int>& frame_ids,
                                   const std::string& scene_name) {
    MetricReport rep;
    for (const int v : frame_ids) {
        const ImageRGB rendered = s.render_view(v);
        const ImageRGB* target = nullptr;
        ImageRGB gt_storage;
        if (s.frames[v].rgb_gt_bright) {
            target = &*s.frames[v].rgb_gt_bright;
        } else {
            const auto it = std::find(s.train_views.begin(), s.train_views.end(), v);
            if (it == s.train_views.end())
                throw ValidationError("eval: view " + std::to_string(v) +
                                      " has neither bright GT nor a supervision target");
            gt_storage = s.supervision[it - s.train_views.begin()].gt_current;
            target = &gt_storage;
        }
        MetricReport::Row row;
        row.scene = scene_name;
        row.view_id = v;
        row.psnr_db = psnr(rendered, *target);
        row.ssim = ssim(rendered, *target);
        rep.rows.push_back(row);
    }
    return rep;
}

/// Mean hold-out PSNR against bright GT (the convergence criterion metric).
inline double holdout_psnr(const TrainingSession& s) {
    double acc = 0.0;
    int n = 0;
    for (const int v : s.holdout_views) {
        if (!s.frames[v].rgb_gt_bright) continue;
        acc += psnr(s.render_view(v), *s.frames[v].rgb_gt_bright);
        ++n;
    }
    if (n == 0) throw ValidationError("eval: no hold-out views with bright GT");
    return acc / n;
}

struct TrainRunResult {
    std::vector<IterationLog> logs;
    std::string checkpoint_path;
};

/// Run (or continue) a session to cfg.iterations, streaming the CSV log and
/// periodic checkpoints into cfg.out_dir.
inline TrainRunResult run_training(TrainingSession& s, bool write_outputs = true) {
    namespace fs = std::filesystem;
    TrainRunResult res;
    std::ofstream csv;
    if (write_outputs) {
        fs::create_directories(s.cfg.out_dir);
        const bool fresh = s.iteration == 0;
        csv.open(fs::path(s.cfg.out_dir) / "train_log.csv", fresh ? std::ios::trunc : std::ios::app);
        if (fresh) csv << log_csv_header() << "\n";
    }
    for (int t = s.iteration; t < s.cfg.iterations; ++t) {
        const IterationLog log = s.step();
        res.logs.push_back(log);
        if (write_outputs) {
            csv << log_csv_row(log) << "\n";
            if (s.cfg.checkpoint_interval > 0 && s.iteration % s.cfg.checkpoint_interval == 0 &&
                s.iteration < s.cfg.iterations) {
                save_checkpoint((fs::path(s.cfg.out_dir) /
                                 ("checkpoint_" + std::to_string(s.iteration) + ".dtgs"))
                                    .string(),
                                s.snapshot());
            }
        }
    }
    if (write_outputs) {
        csv.flush();
        res.checkpoint_path = (fs::path(s.cfg.out_dir) / "checkpoint_final.dtgs").string();
        save_checkpoint(res.checkpoint_path, s.snapshot());
    }
    return res;
}

}  // namespace dtgs
