#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtgs/dataset.hpp"
#include "dtgs/frame.hpp"
#include "dtgs/png_io.hpp"

namespace dtgs {

using Json = nlohmann::json;

inline std::string view_prefix(int id) {
    std::ostringstream os;
    os << std::setw(3) << std::setfill('0') << id;
    return os.str();
}

inline Json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open " + path);
    Json j;
    try {
        f >> j;
    } catch (const Json::exception& e) {
        throw ValidationError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

inline void save_json_file(const std::string& path, const Json& j) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot write " + path);
    f << j.dump(2) << "\n";
}

inline Vec3 vec3_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 3) throw ValidationError("expected a 3-element array");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

/// Parse a synthetic scene spec from its JSON form (the gen-data input file).
inline SyntheticSceneSpec scene_spec_from_json(const Json& j) {
    SyntheticSceneSpec s;
    s.seed = j.value("seed", 0ULL);
    s.n_views = j.value("views", 16);
    s.width = j.value("width", 160);
    s.height = j.value("height", 120);
    s.orbit_radius = j.value("orbit_radius", 4.0);
    s.orbit_height = j.value("orbit_height", 1.6);
    s.fov_y_deg = j.value("fov_deg", 55.0);
    if (j.contains("target")) s.target = vec3_from_json(j["target"]);
    if (j.contains("light_dir")) s.light_dir = vec3_from_json(j["light_dir"]).normalized();
    s.ambient = j.value("ambient", 0.3);
    s.diffuse = j.value("diffuse", 0.7);
    if (j.contains("darken")) {
        const Json& d = j["darken"];
        s.gain = d.value("gain", 0.25);
        s.gamma_dark = d.value("gamma", 1.0);
        s.noise_sigma = d.value("sigma", 0.01);
        s.gain_jitter = d.value("gain_jitter", 0.0);
    }
    s.point_count = j.value("point_count", 2000);
    if (!j.contains("primitives") || !j["primitives"].is_array())
        throw ValidationError("scene spec: missing primitives array");
    for (const Json& p : j["primitives"]) {
        Primitive prim;
        const std::string type = p.value("type", "");
        if (type == "sphere") {
            prim.kind = Primitive::Kind::Sphere;
            prim.center = vec3_from_json(p.at("center"));
            prim.radius = p.at("radius").get<double>();
        } else if (type == "box") {
            prim.kind = Primitive::Kind::Box;
            prim.box_min = vec3_from_json(p.at("min"));
            prim.box_max = vec3_from_json(p.at("max"));
        } else if (type == "plane") {
            prim.kind = Primitive::Kind::Plane;
            prim.center = vec3_from_json(p.at("center"));
            prim.normal = vec3_from_json(p.at("normal")).normalized();
            prim.half_u = p.at("half_u").get<double>();
            prim.half_v = p.at("half_v").get<double>();
        } else {
            throw ValidationError("scene spec: unknown primitive type '" + type + "'");
        }
        prim.albedo = vec3_from_json(p.at("albedo"));
        prim.temperature = p.at("temperature").get<double>();
        s.primitives.push_back(prim);
    }
    s.validate();
    return s;
}

/// Scene directory layout:
///   views/NNN_rgb_low.png, views/NNN_thermal.png, optional views/NNN_rgb_gt.png
///   poses.json  (intrinsics + row-major 4x4 world-to-camera per view)
///   meta.json   (provenance), optional points.json (init point cloud)
inline void save_scene(const std::vector<MultiViewFrame>& frames, const std::string& dir,
                       const PointCloud* points = nullptr, const Json* provenance = nullptr) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "views");
    Json poses;
    if (frames.empty()) throw ValidationError("save_scene: no frames");
    poses["width"] = frames[0].camera.width;
    poses["height"] = frames[0].camera.height;
    poses["views"] = Json::array();
    for (size_t i = 0; i < frames.size(); ++i) {
        const MultiViewFrame& f = frames[i];
        if (!f.shapes_consistent())
            throw ValidationError("save_scene: inconsistent shapes in view " + std::to_string(i));
        const std::string prefix = (fs::path(dir) / "views" / view_prefix(static_cast<int>(i))).string();
        write_png(prefix + "_rgb_low.png", f.rgb_low);
        write_png(prefix + "_thermal.png", f.thermal);
        if (f.rgb_gt_bright) write_png(prefix + "_rgb_gt.png", *f.rgb_gt_bright);

        Json v;
        v["id"] = static_cast<int>(i);
        v["fx"] = f.camera.fx;
        v["fy"] = f.camera.fy;
        v["cx"] = f.camera.cx;
        v["cy"] = f.camera.cy;
        Json m = Json::array();
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) {
                if (r < 3 && c < 3)
                    m.push_back(f.camera.rotation(r, c));
                else if (r < 3)
                    m.push_back(f.camera.translation[r]);
                else
                    m.push_back(c == 3 ? 1.0 : 0.0);
            }
        v["world_to_camera"] = m;
        poses["views"].push_back(v);
    }
    save_json_file((fs::path(dir) / "poses.json").string(), poses);

    Json meta;
    meta["format"] = "dtgs-scene";
    meta["version"] = 1;
    if (provenance) meta["generator"] = *provenance;
    save_json_file((fs::path(dir) / "meta.json").string(), meta);

    if (points) {
        Json pj;
        pj["positions"] = Json::array();
        pj["colors"] = Json::array();
        for (size_t i = 0; i < points->positions.size(); ++i) {
            pj["positions"].push_back({points->positions[i].x(), points->positions[i].y(),
                                       points->positions[i].z()});
            pj["colors"].push_back({points->colors[i].x(), points->colors[i].y(),
                                    points->colors[i].z()});
        }
        save_json_file((fs::path(dir) / "points.json").string(), pj);
    }
}

struct LoadedScene {
    std::vector<MultiViewFrame> frames;
    PointCloud points;  // empty if the directory ships no points.json
};

inline LoadedScene load_scene(const std::string& dir) {
    namespace fs = std::filesystem;
    const Json poses = load_json_file((fs::path(dir) / "poses.json").string());
    if (!poses.contains("views") || !poses["views"].is_array() || poses["views"].empty())
        throw ValidationError("poses.json: no views listed in " + dir);
    const int width = poses.at("width").get<int>();
    const int height = poses.at("height").get<int>();

    LoadedScene scene;
    for (const Json& v : poses["views"]) {
        const int id = v.at("id").get<int>();
        MultiViewFrame f;
        f.camera.width = width;
        f.camera.height = height;
        f.camera.fx = v.at("fx").get<double>();
        f.camera.fy = v.at("fy").get<double>();
        f.camera.cx = v.at("cx").get<double>();
        f.camera.cy = v.at("cy").get<double>();
        const Json& m = v.at("world_to_camera");
        if (!m.is_array() || m.size() != 16)
            throw ValidationError("poses.json: view " + std::to_string(id) +
                                  " world_to_camera must have 16 entries");
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) f.camera.rotation(r, c) = m[4 * r + c].get<double>();
            f.camera.translation[r] = m[4 * r + 3].get<double>();
        }
        if (!f.camera.valid())
            throw ValidationError("poses.json: view " + std::to_string(id) + " has invalid camera");

        const std::string prefix = (fs::path(dir) / "views" / view_prefix(id)).string();
        if (!fs::exists(prefix + "_rgb_low.png"))
            throw ValidationError("scene load: view " + std::to_string(id) + " missing rgb_low image");
        if (!fs::exists(prefix + "_thermal.png"))
            throw ValidationError("scene load: view " + std::to_string(id) + " missing thermal image");
        f.rgb_low = read_png_rgb(prefix + "_rgb_low.png");
        f.thermal = read_png_gray(prefix + "_thermal.png");
        if (fs::exists(prefix + "_rgb_gt.png")) f.rgb_gt_bright = read_png_rgb(prefix + "_rgb_gt.png");
        if (!f.shapes_consistent())
            throw ValidationError("scene load: view " + std::to_string(id) +
                                  " image size does not match poses.json");
        scene.frames.push_back(std::move(f));
    }

    const fs::path pts = fs::path(dir) / "points.json";
    if (fs::exists(pts)) {
        const Json pj = load_json_file(pts.string());
        for (const Json& p : pj.at("positions")) scene.points.positions.push_back(vec3_from_json(p));
        for (const Json& c : pj.at("colors")) scene.points.colors.push_back(vec3_from_json(c));
        if (scene.points.positions.size() != scene.points.colors.size())
            throw ValidationError("points.json: positions/colors length mismatch");
    }
    return scene;
}

}  // namespace dtgs
