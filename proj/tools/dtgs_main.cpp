// Command-line entry points: data generation, training, rendering, evaluation,
// gradient checking and the ablation harness.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dtgs/ablation.hpp"
#include "dtgs/gradcheck.hpp"
#include "dtgs/trainer.hpp"

namespace fs = std::filesystem;
using namespace dtgs;

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out;
    std::string resolution;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int iters = 0;
    bool disable_cyclic = false;
    bool disable_thermal = false;
    int threads = -1;
};

RunConfig load_run_config(const CliOverrides& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) cfg = run_config_from_json(load_json_file(o.config_path));
    if (o.seed_set) cfg.seed = o.seed;
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.iters > 0) cfg.iterations = o.iters;
    if (o.disable_cyclic) cfg.disable_cyclic = true;
    if (o.disable_thermal) cfg.disable_thermal = true;
    if (o.threads >= 0) cfg.threads = o.threads;
    if (!o.resolution.empty()) {
        int w = 0, h = 0;
        char x = 0;
        std::istringstream is(o.resolution);
        if (!(is >> w >> x >> h) || x != 'x' || w <= 0 || h <= 0)
            throw ValidationError("--resolution expects WIDTHxHEIGHT, e.g. 160x120");
        if (cfg.generator.is_null())
            throw ValidationError("--resolution only applies to generator-based configs");
        cfg.generator["width"] = w;
        cfg.generator["height"] = h;
    }
    return cfg;
}

/// Materialize the config's scene: load the directory, or generate + save the
/// synthetic scene under out_dir/scene and load it back (so training always
/// consumes the on-disk format).
LoadedScene materialize_scene(RunConfig& cfg) {
    if (!cfg.scene_dir.empty()) return load_scene(cfg.scene_dir);
    if (cfg.generator.is_null())
        throw ValidationError("config must provide either scene_dir or a generator spec");
    SyntheticSceneSpec spec = scene_spec_from_json(cfg.generator);
    const GeneratedScene gen = generate_scene(spec, cfg.threads);
    const std::string dir = (fs::path(cfg.out_dir) / "scene").string();
    save_scene(gen.frames, dir, &gen.points, &cfg.generator);
    cfg.scene_dir = dir;
    return load_scene(dir);
}

int cmd_gen_data(const std::string& spec_path, const std::string& out_dir,
                 std::uint64_t seed_override, bool seed_set) {
    Json spec_json = load_json_file(spec_path);
    if (seed_set) spec_json["seed"] = seed_override;
    const SyntheticSceneSpec spec = scene_spec_from_json(spec_json);
    const GeneratedScene scene = generate_scene(spec);
    save_scene(scene.frames, out_dir, &scene.points, &spec_json);
    std::cout << "wrote " << scene.frames.size() << " views to " << out_dir << "\n";
    for (size_t v = 0; v < scene.frames.size(); ++v) {
        const auto& f = scene.frames[v];
        double therm_cov = 0.0;
        for (double t : f.thermal.data) therm_cov += t > 0.0 ? 1.0 : 0.0;
        std::cout << "view " << v << ": mean_luma_low=" << mean_luma(f.rgb_low)
                  << " mean_luma_gt=" << (f.rgb_gt_bright ? mean_luma(*f.rgb_gt_bright) : 0.0)
                  << " thermal_coverage=" << therm_cov / static_cast<double>(f.thermal.pixel_count())
                  << "\n";
    }
    return 0;
}

int cmd_train(const CliOverrides& o, const std::string& resume_path) {
    RunConfig cfg = load_run_config(o);
    cfg.validate();
    const LoadedScene scene = materialize_scene(cfg);
    TrainingSession session = [&] {
        if (resume_path.empty()) return TrainingSession::create(cfg, scene);
        CheckpointData ck = load_checkpoint(resume_path, config_hash(cfg));
        if (ck.config_hash_mismatch)
            std::cerr << "warning: checkpoint was written under a different config\n";
        return TrainingSession::resume(cfg, scene, ck);
    }();

    const TrainRunResult res = run_training(session);
    if (!res.logs.empty()) {
        const auto& last = res.logs.back();
        std::cout << "trained " << res.logs.size() << " iterations, final losses: enh=" << last.l_enh
                  << " gs=" << last.l_gs << " therm=" << last.l_therm << " total=" << last.total
                  << "\n";
    }
    std::cout << "checkpoint: " << res.checkpoint_path << "\n";
    std::cout << "log: " << (fs::path(cfg.out_dir) / "train_log.csv").string() << "\n";
    if (!session.holdout_views.empty() && session.frames[session.holdout_views[0]].rgb_gt_bright)
        std::cout << "holdout_psnr_db: " << holdout_psnr(session) << "\n";
    return 0;
}

int cmd_render(const std::string& ckpt, const std::string& scene_dir, const std::string& out_dir,
               const std::string& views_csv, bool views_given) {
    const CheckpointData ck = load_checkpoint(ckpt);
    const LoadedScene scene = load_scene(scene_dir);
    std::vector<int> views;
    if (!views_given) {
        for (size_t i = 0; i < scene.frames.size(); ++i) views.push_back(static_cast<int>(i));
    } else {
        std::istringstream is(views_csv);
        std::string tok;
        while (std::getline(is, tok, ','))
            if (!tok.empty()) views.push_back(std::stoi(tok));
        if (views.empty()) return 0;  // explicit empty selection: nothing to do
    }
    for (const int v : views)
        if (v < 0 || v >= static_cast<int>(scene.frames.size()))
            throw ValidationError("render: unknown view id " + std::to_string(v));
    fs::create_directories(out_dir);
    for (const int v : views) {
        const auto& f = scene.frames[v];
        const RenderOutput out = render(ck.gaussians, f.camera, Vec3::Zero());
        write_png((fs::path(out_dir) / (view_prefix(v) + "_render.png")).string(), out.color);
        write_png((fs::path(out_dir) / (view_prefix(v) + "_transmittance.png")).string(),
                  out.final_transmittance);
        const auto it = std::find(ck.train_view_ids.begin(), ck.train_view_ids.end(), v);
        if (it != ck.train_view_ids.end()) {
            const size_t slot = it - ck.train_view_ids.begin();
            write_png((fs::path(out_dir) / (view_prefix(v) + "_enh.png")).string(),
                      enhance(f.rgb_low, ck.enhancers[slot]));
        }
    }
    std::cout << "rendered " << views.size() << " views to " << out_dir << "\n";
    return 0;
}

void validate_train_log(const std::string& path) {
    std::ifstream f(path);
    if (!f) return;
    std::string line;
    std::getline(f, line);  // header
    double prev_alpha = -1.0;
    long lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string cell;
        std::vector<double> cols;
        while (std::getline(is, cell, ',')) cols.push_back(std::stod(cell));
        if (cols.size() < 11) throw NumericalError("train log: short row at line " + std::to_string(lineno));
        const double alpha = cols[2], le = cols[3], lg = cols[4], lt = cols[5];
        if (le < 0 || lg < 0.1 - 1e-12 || lt < 0 || std::abs(le + lg + lt - 1.0) > 1e-9)
            throw NumericalError("train log: weight invariant violated at line " + std::to_string(lineno));
        if (alpha < -1e-12 || alpha > 1.0 + 1e-12 || alpha < prev_alpha - 1e-12)
            throw NumericalError("train log: alpha invariant violated at line " + std::to_string(lineno));
        prev_alpha = std::max(prev_alpha, alpha);
    }
    std::cout << "train log invariants ok: " << path << "\n";
}

int cmd_eval(const std::string& ckpt, const std::string& scene_dir, const std::string& split,
             const std::string& out_csv, int holdout_every) {
    RunConfig cfg;
    cfg.scene_dir = scene_dir;
    cfg.holdout_every = holdout_every;
    const LoadedScene scene = load_scene(scene_dir);
    const CheckpointData ck = load_checkpoint(ckpt);
    TrainingSession s = TrainingSession::resume(cfg, scene, ck);

    std::vector<int> ids;
    if (split == "holdout")
        ids = s.holdout_views;
    else if (split == "train")
        ids = s.train_views;
    else if (split == "all")
        for (size_t i = 0; i < s.frames.size(); ++i) ids.push_back(static_cast<int>(i));
    else
        throw ValidationError("eval: split must be holdout, train or all");
    if (ids.empty()) throw ValidationError("eval: requested split is empty");

    const std::string scene_name = fs::path(scene_dir).filename().string();
    const MetricReport rep = evaluate_views(s, ids, scene_name);
    std::ofstream csv(out_csv);
    if (!csv) throw ValidationError("eval: cannot write " + out_csv);
    csv.precision(10);
    csv << "scene,view_id,psnr_db,ssim\n";
    for (const auto& r : rep.rows)
        csv << r.scene << ',' << r.view_id << ',' << r.psnr_db << ',' << r.ssim << "\n";
    csv << scene_name << ",mean," << rep.mean_psnr() << ',' << rep.mean_ssim() << "\n";
    std::cout << "eval " << split << ": mean_psnr_db=" << rep.mean_psnr()
              << " mean_ssim=" << rep.mean_ssim() << " (" << rep.rows.size() << " views)\n";

    validate_train_log((fs::path(ckpt).parent_path() / "train_log.csv").string());
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, int n_gaussians, int size, double h, double tol,
                  bool corrupt) {
    GradCheckConfig gc;
    gc.seed = seed;
    gc.n_gaussians = n_gaussians;
    gc.width = gc.height = size;
    gc.h = h;
    gc.tolerance = tol;
    gc.corrupt_hook = corrupt;
    const GradCheckReport rep = run_gradcheck(gc);
    std::cout << "gradcheck seed=" << seed << " h=" << h << " tol=" << tol << "\n";
    for (const auto& c : rep.classes)
        std::cout << "  " << c.name << ": max_rel=" << c.max_rel << " mean_rel=" << c.mean_rel
                  << " (" << c.count << " params)\n";
    std::cout << (rep.pass ? "PASS" : "FAIL") << " max_rel=" << rep.max_rel << "\n";
    return rep.pass ? 0 : 2;
}

int cmd_ablate(const CliOverrides& o, std::vector<std::string> extra_scenes,
               const std::string& out_csv) {
    RunConfig cfg = load_run_config(o);
    cfg.validate();

    std::vector<std::pair<std::string, LoadedScene>> scenes;
    {
        RunConfig c0 = cfg;
        scenes.emplace_back("", materialize_scene(c0));
        scenes.back().first = fs::path(c0.scene_dir).filename().string();
    }
    for (const auto& dir : extra_scenes)
        scenes.emplace_back(fs::path(dir).filename().string(), load_scene(dir));

    std::ofstream csv(out_csv);
    if (!csv) throw ValidationError("ablate: cannot write " + out_csv);
    csv.precision(10);
    csv << "variant,scene,psnr_db,ssim\n";
    for (const auto& [name, scene] : scenes) {
        const auto rows = run_ablation(cfg, scene, name);
        for (const auto& r : rows) {
            csv << r.variant << ',' << r.scene << ',' << r.psnr_db << ',' << r.ssim << "\n";
            std::cout << r.variant << " @ " << r.scene << ": psnr=" << r.psnr_db
                      << " ssim=" << r.ssim << "\n";
        }
    }
    std::cout << "wrote " << out_csv << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thermal-guided Retinex-coupled Gaussian splatting trainer"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic RGBT scene directory");
    std::string gen_spec, gen_out;
    std::uint64_t gen_seed = 0;
    gen->add_option("--spec", gen_spec, "Scene spec JSON")->required();
    gen->add_option("--out", gen_out, "Output scene directory")->required();
    auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "Override the spec seed");

    auto add_overrides = [](CLI::App* cmd, CliOverrides& o, CLI::Option** seed_opt) {
        cmd->add_option("--config", o.config_path, "Run config JSON");
        *seed_opt = cmd->add_option("--seed", o.seed, "Override config seed");
        cmd->add_option("--out", o.out, "Output directory");
        cmd->add_option("--iters", o.iters, "Override iteration count");
        cmd->add_flag("--disable-cyclic", o.disable_cyclic, "Freeze GT at I_low (ablation)");
        cmd->add_flag("--disable-thermal", o.disable_thermal, "Drop the thermal loss (ablation)");
        cmd->add_option("--resolution", o.resolution, "Generator resolution WIDTHxHEIGHT");
        cmd->add_option("--threads", o.threads, "Worker threads (0 = auto)");
    };

    // train
    auto* train = app.add_subcommand("train", "Run the cyclic training loop");
    CliOverrides train_o;
    CLI::Option* train_seed_opt = nullptr;
    std::string resume_path;
    add_overrides(train, train_o, &train_seed_opt);
    train->add_option("--resume", resume_path, "Resume from a checkpoint");

    // render
    auto* rend = app.add_subcommand("render", "Render views from a checkpoint");
    std::string r_ckpt, r_scene, r_out, r_views;
    rend->add_option("--checkpoint", r_ckpt)->required();
    rend->add_option("--scene", r_scene)->required();
    rend->add_option("--out", r_out)->required();
    auto* r_views_opt = rend->add_option(
        "--views", r_views, "Comma-separated view ids; empty string renders nothing (default: all)");

    // eval
    auto* ev = app.add_subcommand("eval", "Score rendered views against ground truth");
    std::string e_ckpt, e_scene, e_split = "holdout", e_out = "report.csv";
    int e_holdout = 8;
    ev->add_option("--checkpoint", e_ckpt)->required();
    ev->add_option("--scene", e_scene)->required();
    ev->add_option("--split", e_split, "holdout | train | all");
    ev->add_option("--out", e_out, "Report CSV path");
    ev->add_option("--holdout-every", e_holdout, "Hold-out stride used at training time");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
    std::uint64_t gc_seed = 0;
    int gc_n = 5, gc_size = 24;
    double gc_h = 1e-5, gc_tol = 1e-4;
    bool gc_corrupt = false;
    gc->add_option("--seed", gc_seed);
    gc->add_option("--gaussians", gc_n);
    gc->add_option("--size", gc_size, "Square image side");
    gc->add_option("--step", gc_h, "Central-difference step");
    gc->add_option("--tol", gc_tol, "Max relative error");
    gc->add_flag("--corrupt", gc_corrupt, "Self-test hook: corrupt one analytic entry");

    // ablate
    auto* ab = app.add_subcommand("ablate", "Run the ablation variants and emit a comparison CSV");
    CliOverrides ab_o;
    CLI::Option* ab_seed_opt = nullptr;
    std::string ab_csv = "ablation.csv";
    std::vector<std::string> ab_scenes;
    add_overrides(ab, ab_o, &ab_seed_opt);
    ab->add_option("--report", ab_csv, "Output CSV");
    ab->add_option("--extra-scene", ab_scenes, "Additional scene directories");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(gen_spec, gen_out, gen_seed, gen_seed_opt->count() > 0);
        if (train->parsed()) {
            train_o.seed_set = train_seed_opt->count() > 0;
            return cmd_train(train_o, resume_path);
        }
        if (rend->parsed()) return cmd_render(r_ckpt, r_scene, r_out, r_views, r_views_opt->count() > 0);
        if (ev->parsed()) return cmd_eval(e_ckpt, e_scene, e_split, e_out, e_holdout);
        if (gc->parsed()) return cmd_gradcheck(gc_seed, gc_n, gc_size, gc_h, gc_tol, gc_corrupt);
        if (ab->parsed()) {
            ab_o.seed_set = ab_seed_opt->count() > 0;
            return cmd_ablate(ab_o, ab_scenes, ab_csv);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
