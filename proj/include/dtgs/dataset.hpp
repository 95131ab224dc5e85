#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "dtgs/camera.hpp"
#include "dtgs/frame.hpp"
#include "dtgs/gaussian.hpp"
#include "dtgs/image.hpp"
#include "dtgs/math.hpp"
#include "dtgs/rng.hpp"
#include "dtgs/threading.hpp"

namespace dtgs {

/// Emissive Lambertian primitive: albedo drives RGB shading, temperature in
/// [0,1] drives the thermal channel directly.
struct Primitive {
    enum class Kind { Sphere, Box, Plane };
    Kind kind = Kind::Sphere;

    Vec3 center = Vec3::Zero();  // sphere / plane
    double radius = 1.0;         // sphere
    Vec3 box_min = Vec3::Zero(), box_max = Vec3::Ones();
    Vec3 normal = Vec3(0, 0, 1);  // plane
    double half_u = 1.0, half_v = 1.0;

    Vec3 albedo = Vec3(0.5, 0.5, 0.5);
    double temperature = 0.5;
};

struct SyntheticSceneSpec {
    std::uint64_t seed = 0;
    std::vector<Primitive> primitives;
    int n_views = 16;
    int width = 160, height = 120;
    double orbit_radius = 4.0;
    double orbit_height = 1.6;
    double fov_y_deg = 55.0;
    Vec3 target = Vec3::Zero();
    Vec3 light_dir = Vec3(-0.4, 0.25, -0.85).normalized();
    double ambient = 0.3, diffuse = 0.7;
    double gain = 0.25;        // g in (0,1]
    double gamma_dark = 1.0;   // >= 1
    double noise_sigma = 0.01;
    double gain_jitter = 0.0;  // per-view multiplicative exposure jitter fraction
    int point_count = 2000;

    void validate() const {
        if (primitives.empty()) throw ValidationError("scene spec: primitive list is empty");
        if (n_views < 2) throw ValidationError("scene spec: need at least 2 views");
        if (width <= 0 || height <= 0) throw ValidationError("scene spec: image dims must be positive");
        if (!(gain > 0.0 && gain <= 1.0)) throw ValidationError("scene spec: gain must be in (0,1]");
        if (gamma_dark < 1.0) throw ValidationError("scene spec: gamma_dark must be >= 1");
        if (noise_sigma < 0.0) throw ValidationError("scene spec: noise sigma must be >= 0");
        if (point_count < 8) throw ValidationError("scene spec: point_count too small");
    }
};

struct PointCloud {
    std::vector<Vec3> positions;
    std::vector<Vec3> colors;
};

struct GeneratedScene {
    std::vector<MultiViewFrame> frames;
    PointCloud points;
};

namespace detail {

struct Hit {
    double t = 0.0;
    Vec3 normal = Vec3::Zero();
    int prim = -1;
};

inline std::optional<double> intersect_sphere(const Vec3& o, const Vec3& d, const Primitive& p) {
    const Vec3 oc = o - p.center;
    const double b = oc.dot(d);
    const double c = oc.dot(oc) - p.radius * p.radius;
    const double disc = b * b - c;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    double t = -b - sq;
    if (t < 1e-6) t = -b + sq;
    if (t < 1e-6) return std::nullopt;
    return t;
}

inline std::optional<Hit> intersect(const Vec3& o, const Vec3& d, const Primitive& p, int index) {
    switch (p.kind) {
        case Primitive::Kind::Sphere: {
            const auto t = intersect_sphere(o, d, p);
            if (!t) return std::nullopt;
            Hit h;
            h.t = *t;
            h.normal = (o + d * h.t - p.center).normalized();
            h.prim = index;
            return h;
        }
        case Primitive::Kind::Box: {
            double tmin = -1e30, tmax = 1e30;
            int axis = -1;
            for (int a = 0; a < 3; ++a) {
                const double inv = 1.0 / d[a];
                double t0 = (p.box_min[a] - o[a]) * inv;
                double t1 = (p.box_max[a] - o[a]) * inv;
                if (t0 > t1) std::swap(t0, t1);
                if (t0 > tmin) {
                    tmin = t0;
                    axis = a;
                }
                tmax = std::min(tmax, t1);
                if (tmin > tmax) return std::nullopt;
            }
            if (tmin < 1e-6 || axis < 0) return std::nullopt;
            Hit h;
            h.t = tmin;
            h.normal = Vec3::Zero();
            h.normal[axis] = d[axis] > 0.0 ? -1.0 : 1.0;
            h.prim = index;
            return h;
        }
        default: {
            const double denom = d.dot(p.normal);
            if (std::abs(denom) < 1e-12) return std::nullopt;
            const double t = (p.center - o).dot(p.normal) / denom;
            if (t < 1e-6) return std::nullopt;
            // tangent frame
            Vec3 u_axis = std::abs(p.normal.z()) < 0.9 ? Vec3(0, 0, 1).cross(p.normal)
                                                       : Vec3(1, 0, 0).cross(p.normal);
            u_axis.normalize();
            const Vec3 v_axis = p.normal.cross(u_axis);
            const Vec3 rel = o + d * t - p.center;
            if (std::abs(rel.dot(u_axis)) > p.half_u || std::abs(rel.dot(v_axis)) > p.half_v)
                return std::nullopt;
            Hit h;
            h.t = t;
            h.normal = denom < 0.0 ? p.normal : Vec3(-p.normal);
            h.prim = index;
            return h;
        }
    }
}

inline std::optional<Hit> trace(const Vec3& o, const Vec3& d, const std::vector<Primitive>& prims) {
    std::optional<Hit> best;
    for (size_t i = 0; i < prims.size(); ++i) {
        const auto h = intersect(o, d, prims[i], static_cast<int>(i));
        if (h && (!best || h->t < best->t)) best = h;
    }
    return best;
}

inline Vec3 shade(const SyntheticSceneSpec& spec, const Primitive& p, const Vec3& n) {
    const double lambert = std::max(0.0, n.dot(-spec.light_dir));
    const double f = spec.ambient + spec.diffuse * lambert;
    return Vec3(clamp01(p.albedo.x() * f), clamp01(p.albedo.y() * f), clamp01(p.albedo.z() * f));
}

inline double primitive_area(const Primitive& p) {
    switch (p.kind) {
        case Primitive::Kind::Sphere: return 4.0 * M_PI * p.radius * p.radius;
        case Primitive::Kind::Box: {
            const Vec3 e = p.box_max - p.box_min;
            return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x());
        }
        default: return 4.0 * p.half_u * p.half_v;
    }
}

inline void sample_surface(Rng& rng, const Primitive& p, Vec3& pos, Vec3& normal) {
    switch (p.kind) {
        case Primitive::Kind::Sphere: {
            const double z = rng.uniform(-1.0, 1.0);
            const double phi = rng.uniform(0.0, 2.0 * M_PI);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            normal = Vec3(r * std::cos(phi), r * std::sin(phi), z);
            pos = p.center + p.radius * normal;
            return;
        }
        case Primitive::Kind::Box: {
            const Vec3 e = p.box_max - p.box_min;
            const double areas[3] = {e.y() * e.z(), e.z() * e.x(), e.x() * e.y()};
            const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
            double pick = rng.uniform(0.0, total);
            for (int a = 0; a < 3; ++a)
                for (int s = 0; s < 2; ++s) {
                    if (pick < areas[a]) {
                        Vec3 q;
                        q[a] = s ? p.box_max[a] : p.box_min[a];
                        const int u = (a + 1) % 3, v = (a + 2) % 3;
                        q[u] = rng.uniform(p.box_min[u], p.box_max[u]);
                        q[v] = rng.uniform(p.box_min[v], p.box_max[v]);
                        pos = q;
                        normal = Vec3::Zero();
                        normal[a] = s ? 1.0 : -1.0;
                        return;
                    }
                    pick -= areas[a];
                }
            pos = 0.5 * (p.box_min + p.box_max);
            normal = Vec3(0, 0, 1);
            return;
        }
        default: {
            Vec3 u_axis = std::abs(p.normal.z()) < 0.9 ? Vec3(0, 0, 1).cross(p.normal)
                                                       : Vec3(1, 0, 0).cross(p.normal);
            u_axis.normalize();
            const Vec3 v_axis = p.normal.cross(u_axis);
            pos = p.center + rng.uniform(-p.half_u, p.half_u) * u_axis +
                  rng.uniform(-p.half_v, p.half_v) * v_axis;
            normal = p.normal;
            return;
        }
    }
}

}  // namespace detail

/// Low-light degradation: I_low = clamp((g * I)^gamma + N(0, sigma), 0, 1).
/// Thermal channels never pass through here.
inline ImageRGB darken(const ImageRGB& i_gt, double g, double gamma_dark, double sigma,
                       std::uint64_t seed) {
    if (!(g > 0.0 && g <= 1.0)) throw ValidationError("darken: gain must be in (0,1]");
    if (gamma_dark < 1.0) throw ValidationError("darken: gamma_dark must be >= 1");
    if (sigma < 0.0) throw ValidationError("darken: sigma must be >= 0");
    Rng rng(seed);
    ImageRGB out(i_gt.width, i_gt.height);
    for (size_t i = 0; i < i_gt.data.size(); ++i) {
        double v = std::pow(g * i_gt.data[i], gamma_dark);
        if (sigma > 0.0) v += sigma * rng.normal();
        out.data[i] = clamp01(v);
    }
    return out;
}

/// Deterministic synthetic RGBT scene: bright GT by ray-primitive intersection
/// with Lambertian shading, thermal as nearest-hit emission, point cloud sampled
/// on primitive surfaces for Gaussian initialization.
inline GeneratedScene generate_scene(const SyntheticSceneSpec& spec, int n_threads = 0) {
    spec.validate();
    GeneratedScene scene;
    scene.frames.resize(spec.n_views);

    // Per-view exposure gains drawn up-front so threading cannot reorder draws.
    Rng gain_rng(spec.seed ^ 0x5bd1e995u);
    std::vector<double> view_gain(spec.n_views, spec.gain);
    for (int v = 0; v < spec.n_views; ++v) {
        const double jitter = spec.gain_jitter * gain_rng.uniform(-1.0, 1.0);
        view_gain[v] = std::min(1.0, std::max(1e-4, spec.gain * (1.0 + jitter)));
    }

    parallel_chunks(spec.n_views, resolve_threads(n_threads), [&](int, int begin, int end) {
        for (int v = begin; v < end; ++v) {
            const double theta = 2.0 * M_PI * v / spec.n_views;
            const Vec3 eye = spec.target + Vec3(spec.orbit_radius * std::cos(theta),
                                                spec.orbit_radius * std::sin(theta),
                                                spec.orbit_height);
            MultiViewFrame& f = scene.frames[v];
            f.camera = make_lookat_camera(eye, spec.target, spec.fov_y_deg, spec.width, spec.height);
            ImageRGB bright(spec.width, spec.height, 0.0);
            f.thermal = ImageGray(spec.width, spec.height, 0.0);
            for (int y = 0; y < spec.height; ++y)
                for (int x = 0; x < spec.width; ++x) {
                    Vec3 o, d;
                    f.camera.pixel_ray(y, x, o, d);
                    const auto hit = detail::trace(o, d, spec.primitives);
                    if (hit) {
                        const Primitive& p = spec.primitives[hit->prim];
                        bright.set_pixel(y, x, detail::shade(spec, p, hit->normal));
                        f.thermal.at(y, x) = p.temperature;
                    }
                }
            f.rgb_low = darken(bright, view_gain[v], spec.gamma_dark, spec.noise_sigma,
                               spec.seed * 1000003ULL + static_cast<std::uint64_t>(v));
            f.rgb_gt_bright = std::move(bright);
        }
    });

    Rng rng(spec.seed ^ 0x2545f491u);
    std::vector<double> cum_area(spec.primitives.size());
    double total = 0.0;
    for (size_t i = 0; i < spec.primitives.size(); ++i) {
        total += detail::primitive_area(spec.primitives[i]);
        cum_area[i] = total;
    }
    scene.points.positions.reserve(spec.point_count);
    scene.points.colors.reserve(spec.point_count);
    for (int i = 0; i < spec.point_count; ++i) {
        const double pick = rng.uniform(0.0, total);
        size_t pi = std::lower_bound(cum_area.begin(), cum_area.end(), pick) - cum_area.begin();
        pi = std::min(pi, spec.primitives.size() - 1);
        Vec3 pos, normal;
        detail::sample_surface(rng, spec.primitives[pi], pos, normal);
        scene.points.positions.push_back(pos);
        scene.points.colors.push_back(detail::shade(spec, spec.primitives[pi], normal));
    }
    return scene;
}

/// One Gaussian per point: isotropic scale from the mean distance to the k
/// nearest neighbors, opacity 0.1, color from the point's albedo.
inline std::vector<Gaussian3D> init_gaussians(const PointCloud& cloud, int k_neighbors = 3) {
    const size_t n = cloud.positions.size();
    if (n < static_cast<size_t>(k_neighbors) + 1)
        throw ValidationError("init_gaussians: need at least k+1 points");
    std::vector<Gaussian3D> out(n);
    std::vector<double> dists;
    for (size_t i = 0; i < n; ++i) {
        dists.clear();
        dists.reserve(n - 1);
        for (size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            dists.push_back((cloud.positions[i] - cloud.positions[j]).norm());
        }
        double mean = 0.0;
        std::partial_sort(dists.begin(), dists.begin() + k_neighbors, dists.end());
        for (int k = 0; k < k_neighbors; ++k) mean += dists[k];
        mean /= k_neighbors;
        mean = std::max(mean, 1e-4);

        Gaussian3D& g = out[i];
        g.position = cloud.positions[i];
        g.log_scale = Vec3::Constant(std::log(mean));
        g.rotation = Vec4(1, 0, 0, 0);
        g.opacity_logit = logit(0.1);
        const Vec3 c = cloud.colors[i];
        g.color_raw = Vec3(logit(std::clamp(c.x(), 1e-4, 1.0 - 1e-4)),
                           logit(std::clamp(c.y(), 1e-4, 1.0 - 1e-4)),
                           logit(std::clamp(c.z(), 1e-4, 1.0 - 1e-4)));
    }
    return out;
}

}  // namespace dtgs
