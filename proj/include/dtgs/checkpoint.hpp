#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtgs/bundle.hpp"
#include "dtgs/optimizer.hpp"
#include "dtgs/schedule.hpp"

namespace dtgs {

inline constexpr char kCheckpointMagic[4] = {'D', 'T', 'G', 'S'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Full resume state: parameters, optimizer moments, per-view supervision
/// targets, iteration counter and the RNG stream.
struct CheckpointData {
    int iteration = 0;
    std::vector<Gaussian3D> gaussians;
    std::vector<EnhancerParams> enhancers;
    AdamState adam;
    std::vector<SupervisionState> supervision;
    std::vector<int> train_view_ids;
    std::uint64_t rng_state = 0;
    std::uint64_t config_hash = 0;
    bool config_hash_mismatch = false;  // set by load when the caller's hash differs
};

namespace detail {

inline void write_f64(std::ofstream& f, const double* p, size_t n) {
    f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

inline void read_f64(std::ifstream& f, double* p, size_t n, const std::string& what) {
    f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    if (static_cast<size_t>(f.gcount()) != n * sizeof(double))
        throw ValidationError("checkpoint: truncated file while reading " + what);
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const CheckpointData& d) {
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint format assumes a little-endian host");
    nlohmann::json h;
    h["version"] = kCheckpointVersion;
    h["iteration"] = d.iteration;
    h["n_gaussians"] = d.gaussians.size();
    h["n_enhancers"] = d.enhancers.size();
    h["grid_h"] = d.enhancers.empty() ? 0 : d.enhancers[0].grid_h;
    h["grid_w"] = d.enhancers.empty() ? 0 : d.enhancers[0].grid_w;
    h["exposure_target"] = d.enhancers.empty() ? 0.5 : d.enhancers[0].exposure_target;
    h["adam_step_count"] = d.adam.step_count;
    h["rng_state"] = std::to_string(d.rng_state);
    h["config_hash"] = std::to_string(d.config_hash);
    h["train_view_ids"] = d.train_view_ids;
    h["gt_width"] = d.supervision.empty() ? 0 : d.supervision[0].gt_current.width;
    h["gt_height"] = d.supervision.empty() ? 0 : d.supervision[0].gt_current.height;
    h["gt_count"] = d.supervision.size();
    h["t_transition"] = d.supervision.empty() ? 8000 : d.supervision[0].t_transition;
    nlohmann::json sup_iters = nlohmann::json::array();
    for (const auto& s : d.supervision) sup_iters.push_back(s.iteration);
    h["gt_iterations"] = sup_iters;
    const std::string header = h.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("checkpoint: cannot write " + path);
    f.write(kCheckpointMagic, 4);
    const std::uint32_t ver = kCheckpointVersion;
    f.write(reinterpret_cast<const char*>(&ver), 4);
    const std::uint64_t hlen = header.size();
    f.write(reinterpret_cast<const char*>(&hlen), 8);
    f.write(header.data(), static_cast<std::streamsize>(header.size()));

    const ParamBundle bundle = gather_params(d.gaussians, d.enhancers);
    detail::write_f64(f, bundle.values.data(), bundle.values.size());
    detail::write_f64(f, d.adam.m.data(), d.adam.m.size());
    detail::write_f64(f, d.adam.v.data(), d.adam.v.size());
    for (const auto& s : d.supervision)
        detail::write_f64(f, s.gt_current.data.data(), s.gt_current.data.size());
    if (!f) throw ValidationError("checkpoint: short write to " + path);
}

inline CheckpointData load_checkpoint(const std::string& path, std::uint64_t expected_config_hash = 0) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("checkpoint: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (f.gcount() != 4 || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw ValidationError("checkpoint: bad magic in " + path + " (not a DTGS checkpoint)");
    std::uint32_t ver = 0;
    f.read(reinterpret_cast<char*>(&ver), 4);
    if (ver != kCheckpointVersion)
        throw ValidationError("checkpoint: version mismatch in " + path + " (file v" +
                              std::to_string(ver) + ", supported v" +
                              std::to_string(kCheckpointVersion) + ")");
    std::uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 8);
    if (!f || hlen == 0 || hlen > (1ULL << 24))
        throw ValidationError("checkpoint: corrupt header length in " + path);
    std::string header(hlen, '\0');
    f.read(header.data(), static_cast<std::streamsize>(hlen));
    if (static_cast<std::uint64_t>(f.gcount()) != hlen)
        throw ValidationError("checkpoint: truncated header in " + path);
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("checkpoint: malformed header JSON: ") + e.what());
    }

    CheckpointData d;
    d.iteration = h.at("iteration").get<int>();
    const size_t n_gaussians = h.at("n_gaussians").get<size_t>();
    const size_t n_enh = h.at("n_enhancers").get<size_t>();
    const int grid_h = h.at("grid_h").get<int>();
    const int grid_w = h.at("grid_w").get<int>();
    const double exposure = h.at("exposure_target").get<double>();
    d.adam.step_count = h.at("adam_step_count").get<long>();
    d.rng_state = std::stoull(h.at("rng_state").get<std::string>());
    d.config_hash = std::stoull(h.at("config_hash").get<std::string>());
    d.train_view_ids = h.at("train_view_ids").get<std::vector<int>>();
    if (expected_config_hash != 0 && d.config_hash != expected_config_hash)
        d.config_hash_mismatch = true;

    d.gaussians.resize(n_gaussians);
    d.enhancers.assign(n_enh, EnhancerParams::make(grid_h, grid_w, exposure));
    BundleLayout layout{static_cast<int>(n_gaussians), static_cast<int>(n_enh), grid_h, grid_w};
    ParamBundle bundle(layout);
    detail::read_f64(f, bundle.values.data(), bundle.values.size(), "parameters");
    scatter_params(bundle, d.gaussians, d.enhancers);
    d.adam.m.resize(layout.total());
    d.adam.v.resize(layout.total());
    detail::read_f64(f, d.adam.m.data(), d.adam.m.size(), "adam first moments");
    detail::read_f64(f, d.adam.v.data(), d.adam.v.size(), "adam second moments");

    const int gw = h.at("gt_width").get<int>(), gh = h.at("gt_height").get<int>();
    const size_t gt_count = h.at("gt_count").get<size_t>();
    const int t_transition = h.at("t_transition").get<int>();
    const auto gt_iters = h.at("gt_iterations").get<std::vector<int>>();
    d.supervision.resize(gt_count);
    for (size_t i = 0; i < gt_count; ++i) {
        d.supervision[i].gt_current = ImageRGB(gw, gh);
        d.supervision[i].t_transition = t_transition;
        d.supervision[i].iteration = i < gt_iters.size() ? gt_iters[i] : 0;
        detail::read_f64(f, d.supervision[i].gt_current.data.data(),
                         d.supervision[i].gt_current.data.size(), "supervision target");
    }
    return d;
}

}  // namespace dtgs
