#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "dtgs/bundle.hpp"
#include "dtgs/camera.hpp"
#include "dtgs/gaussian.hpp"
#include "dtgs/image.hpp"
#include "dtgs/threading.hpp"

namespace dtgs {

inline constexpr double kNearPlane = 0.01;
inline constexpr double kCovRegularization = 0.3;  // pixels^2, added to cov2d diagonal
inline constexpr double kAlphaClamp = 0.99;
inline constexpr double kTransmittanceStop = 1e-4;
// Mahalanobis power cutoff; exp(-33) ~ 5e-15, below double accumulation noise.
inline constexpr double kMaxGaussianPower = 33.0;
inline constexpr int kTileSize = 16;

/// Screen-space realization of one Gaussian.
struct Splat2D {
    Vec2 mean2d = Vec2::Zero();
    Mat2 cov2d = Mat2::Zero();  // regularized
    double depth = 0.0;         // camera-space z
    double opacity = 0.0;       // activated
    Vec3 color = Vec3::Zero();  // activated
    int source_index = -1;
};

/// Perspective projection of a Gaussian; absent when the center is at or behind
/// the near plane. cov2d = J W Sigma W^T J^T + 0.3 I with J the pinhole Jacobian
/// at the center.
inline std::optional<Splat2D> project(const Gaussian3D& g, const Camera& cam) {
    const Vec3 t = cam.world_to_camera(g.position);
    if (t.z() <= kNearPlane) return std::nullopt;
    Splat2D s;
    s.depth = t.z();
    s.mean2d = cam.project(t);
    Eigen::Matrix<double, 2, 3> j;
    j << cam.fx / t.z(), 0.0, -cam.fx * t.x() / (t.z() * t.z()),
         0.0, cam.fy / t.z(), -cam.fy * t.y() / (t.z() * t.z());
    const Eigen::Matrix<double, 2, 3> m = j * cam.rotation;
    s.cov2d = m * covariance_of(g) * m.transpose() + kCovRegularization * Mat2::Identity();
    const Activated act = activate(g);
    s.opacity = act.opacity;
    s.color = act.color;
    return s;
}

/// Forward render plus the state the backward pass re-walks.
struct RenderOutput {
    ImageRGB color;
    ImageGray final_transmittance;

    std::vector<Splat2D> splats;  // depth-sorted survivors
    std::vector<Mat2> inv_cov;    // aligned with splats
    std::vector<std::vector<int>> tile_lists;
    int tiles_x = 0, tiles_y = 0;
    Vec3 background = Vec3::Zero();
    bool retained = false;
};

namespace detail {

inline double max_eigenvalue_2x2(const Mat2& c) {
    const double mid = 0.5 * (c(0, 0) + c(1, 1));
    const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
    return mid + std::sqrt(std::max(0.0, mid * mid - det));
}

}  // namespace detail

/// Front-to-back alpha compositing over depth-sorted splats.
/// a_i = min(0.99, opacity_i * exp(-power_i)); accumulation stops once the
/// transmittance falls below 1e-4.
inline RenderOutput render(const std::vector<Gaussian3D>& gaussians, const Camera& cam,
                           const Vec3& background, bool retain = false, int n_threads = 0) {
    if (!cam.valid()) throw ValidationError("render: invalid camera");
    for (size_t i = 0; i < gaussians.size(); ++i)
        if (!gaussians[i].all_finite())
            throw NumericalError("render: non-finite parameter in Gaussian " + std::to_string(i));

    RenderOutput out;
    out.background = background;
    out.retained = retain;
    out.color = ImageRGB(cam.width, cam.height);
    out.final_transmittance = ImageGray(cam.width, cam.height, 1.0);

    out.splats.reserve(gaussians.size());
    for (size_t i = 0; i < gaussians.size(); ++i) {
        auto s = project(gaussians[i], cam);
        if (s) {
            s->source_index = static_cast<int>(i);
            out.splats.push_back(*s);
        }
    }
    std::sort(out.splats.begin(), out.splats.end(), [](const Splat2D& a, const Splat2D& b) {
        return a.depth != b.depth ? a.depth < b.depth : a.source_index < b.source_index;
    });

    out.tiles_x = (cam.width + kTileSize - 1) / kTileSize;
    out.tiles_y = (cam.height + kTileSize - 1) / kTileSize;
    out.tile_lists.assign(static_cast<size_t>(out.tiles_x) * out.tiles_y, {});
    out.inv_cov.resize(out.splats.size());
    for (size_t s = 0; s < out.splats.size(); ++s) {
        const Splat2D& sp = out.splats[s];
        out.inv_cov[s] = sp.cov2d.inverse();
        const double radius = std::sqrt(2.0 * kMaxGaussianPower * detail::max_eigenvalue_2x2(sp.cov2d));
        const int x0 = std::max(0, static_cast<int>(std::floor((sp.mean2d.x() - radius) / kTileSize)));
        const int x1 = std::min(out.tiles_x - 1, static_cast<int>(std::floor((sp.mean2d.x() + radius) / kTileSize)));
        const int y0 = std::max(0, static_cast<int>(std::floor((sp.mean2d.y() - radius) / kTileSize)));
        const int y1 = std::min(out.tiles_y - 1, static_cast<int>(std::floor((sp.mean2d.y() + radius) / kTileSize)));
        for (int ty = y0; ty <= y1; ++ty)
            for (int tx = x0; tx <= x1; ++tx)
                out.tile_lists[static_cast<size_t>(ty) * out.tiles_x + tx].push_back(static_cast<int>(s));
    }

    const int n_tiles = out.tiles_x * out.tiles_y;
    parallel_chunks(n_tiles, resolve_threads(n_threads), [&](int, int begin, int end) {
        for (int tile = begin; tile < end; ++tile) {
            const int tx = tile % out.tiles_x, ty = tile / out.tiles_x;
            const auto& list = out.tile_lists[tile];
            const int px1 = std::min(cam.width, (tx + 1) * kTileSize);
            const int py1 = std::min(cam.height, (ty + 1) * kTileSize);
            for (int y = ty * kTileSize; y < py1; ++y)
                for (int x = tx * kTileSize; x < px1; ++x) {
                    const Vec2 pix(x + 0.5, y + 0.5);
                    Vec3 acc = Vec3::Zero();
                    double t = 1.0;
                    for (const int s : list) {
                        const Splat2D& sp = out.splats[s];
                        const Vec2 d = pix - sp.mean2d;
                        const double power = 0.5 * d.dot(out.inv_cov[s] * d);
                        if (power > kMaxGaussianPower) continue;
                        const double a = std::min(kAlphaClamp, sp.opacity * std::exp(-power));
                        acc += (a * t) * sp.color;
                        t *= 1.0 - a;
                        if (t < kTransmittanceStop) break;
                    }
                    acc += t * background;
                    out.color.set_pixel(y, x, acc);
                    out.final_transmittance.at(y, x) = t;
                }
        }
    });

    if (!retain) {
        out.splats.clear();
        out.inv_cov.clear();
        out.tile_lists.clear();
    }
    return out;
}

/// Analytic backward pass: accumulates dL/d(raw Gaussian parameters) into the
/// Gaussian section of `grads`. Recomputes each pixel's front-to-back state from
/// the retained tile lists; per-worker buffers are reduced in worker order so
/// results are deterministic for a fixed thread count.
inline void render_backward(const std::vector<Gaussian3D>& gaussians, const Camera& cam,
                            const RenderOutput& saved, const ImageRGB& dl_dcolor,
                            GradBundle& grads, int n_threads = 0) {
    if (!saved.retained)
        throw ValidationError("render_backward: render was not called with gradient retention");
    if (dl_dcolor.width != cam.width || dl_dcolor.height != cam.height)
        throw ValidationError("render_backward: gradient image dimensions mismatch");
    if (grads.layout.n_gaussians != static_cast<int>(gaussians.size()))
        throw ValidationError("render_backward: grad bundle does not match scene size");

    const size_t n_splats = saved.splats.size();
    const int n_workers = resolve_threads(n_threads);
    // Per-splat accumulators: d_mean2d(2), d_invcov(4, row-major), d_opacity(1), d_color(3).
    constexpr int kSlot = 10;
    std::vector<std::vector<double>> worker_acc(n_workers);

    const int n_tiles = saved.tiles_x * saved.tiles_y;
    parallel_chunks(n_tiles, n_workers, [&](int worker, int begin, int end) {
        auto& acc = worker_acc[worker];
        acc.assign(n_splats * kSlot, 0.0);
        for (int tile = begin; tile < end; ++tile) {
            const int tx = tile % saved.tiles_x, ty = tile / saved.tiles_x;
            const auto& list = saved.tile_lists[tile];
            if (list.empty()) continue;
            const int px1 = std::min(cam.width, (tx + 1) * kTileSize);
            const int py1 = std::min(cam.height, (ty + 1) * kTileSize);
            for (int y = ty * kTileSize; y < py1; ++y)
                for (int x = tx * kTileSize; x < px1; ++x) {
                    const Vec3 u = dl_dcolor.pixel(y, x);
                    if (u.isZero(0.0)) continue;
                    const Vec2 pix(x + 0.5, y + 0.5);
                    const Vec3 c_total = saved.color.pixel(y, x);
                    Vec3 prefix = Vec3::Zero();
                    double t = 1.0;
                    for (const int s : list) {
                        const Splat2D& sp = saved.splats[s];
                        const Vec2 d = pix - sp.mean2d;
                        const Vec2 lam_d = saved.inv_cov[s] * d;
                        const double power = 0.5 * d.dot(lam_d);
                        if (power > kMaxGaussianPower) continue;
                        const double g_val = std::exp(-power);
                        const double a_raw = sp.opacity * g_val;
                        const bool clamped = a_raw > kAlphaClamp;
                        const double a = clamped ? kAlphaClamp : a_raw;
                        const double w = a * t;
                        double* slot = acc.data() + static_cast<size_t>(s) * kSlot;
                        slot[7] += w * u[0];
                        slot[8] += w * u[1];
                        slot[9] += w * u[2];
                        prefix += w * sp.color;
                        const Vec3 s_after = c_total - prefix;
                        const double dc_da = u.dot(t * sp.color - s_after / (1.0 - a));
                        if (!clamped) {
                            slot[6] += dc_da * g_val;
                            const double d_power = -a_raw * dc_da;
                            slot[0] += -d_power * lam_d[0];
                            slot[1] += -d_power * lam_d[1];
                            slot[2] += d_power * 0.5 * d[0] * d[0];
                            slot[3] += d_power * 0.5 * d[0] * d[1];
                            slot[4] += d_power * 0.5 * d[1] * d[0];
                            slot[5] += d_power * 0.5 * d[1] * d[1];
                        }
                        t *= 1.0 - a;
                        if (t < kTransmittanceStop) break;
                    }
                }
        }
    });

    std::vector<double> acc(n_splats * kSlot, 0.0);
    for (const auto& wacc : worker_acc)
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += wacc[i];

    // Chain per-splat gradients back through projection and activation.
    for (size_t s = 0; s < n_splats; ++s) {
        const double* slot = acc.data() + s * kSlot;
        const Splat2D& sp = saved.splats[s];
        const Gaussian3D& g = gaussians[sp.source_index];
        double* out = grads.gaussian_slot(sp.source_index);

        const Vec2 gm(slot[0], slot[1]);
        Mat2 d_lambda;
        d_lambda << slot[2], slot[3], slot[4], slot[5];
        const Mat2& lambda = saved.inv_cov[s];
        const Mat2 d_cov = -lambda * d_lambda * lambda;

        const Vec3 t = cam.world_to_camera(g.position);
        Eigen::Matrix<double, 2, 3> j;
        j << cam.fx / t.z(), 0.0, -cam.fx * t.x() / (t.z() * t.z()),
             0.0, cam.fy / t.z(), -cam.fy * t.y() / (t.z() * t.z());
        const Eigen::Matrix<double, 2, 3> m = j * cam.rotation;
        const Mat3 sigma = covariance_of(g);

        Vec3 dt = j.transpose() * gm;
        const Eigen::Matrix<double, 2, 3> dm = (d_cov + d_cov.transpose()) * m * sigma;
        const Mat3 d_sigma = m.transpose() * d_cov * m;
        const Eigen::Matrix<double, 2, 3> dj = dm * cam.rotation.transpose();
        const double z2 = t.z() * t.z(), z3 = z2 * t.z();
        dt.x() += dj(0, 2) * (-cam.fx / z2);
        dt.y() += dj(1, 2) * (-cam.fy / z2);
        dt.z() += dj(0, 0) * (-cam.fx / z2) + dj(1, 1) * (-cam.fy / z2) +
                  dj(0, 2) * (2.0 * cam.fx * t.x() / z3) + dj(1, 2) * (2.0 * cam.fy * t.y() / z3);
        const Vec3 d_pos = cam.rotation.transpose() * dt;
        out[0] += d_pos.x();
        out[1] += d_pos.y();
        out[2] += d_pos.z();

        const double qn = g.rotation.norm();
        const Vec4 qh = g.rotation / qn;
        const Mat3 rot = rotation_from_unit_quat(qh);
        const Vec3 d2(std::exp(2.0 * g.log_scale.x()), std::exp(2.0 * g.log_scale.y()),
                      std::exp(2.0 * g.log_scale.z()));
        const Mat3 d_rot = (d_sigma + d_sigma.transpose()) * rot * d2.asDiagonal();
        const Mat3 b = rot.transpose() * d_sigma * rot;
        out[3] += b(0, 0) * 2.0 * d2.x();
        out[4] += b(1, 1) * 2.0 * d2.y();
        out[5] += b(2, 2) * 2.0 * d2.z();

        Vec4 dqh;
        for (int k = 0; k < 4; ++k)
            dqh[k] = (d_rot.array() * rotation_grad_unit_quat(qh, k).array()).sum();
        const Vec4 dq = (dqh - qh * qh.dot(dqh)) / qn;
        for (int k = 0; k < 4; ++k) out[6 + k] += dq[k];

        out[10] += slot[6] * sigmoid_grad_from_value(sp.opacity);
        for (int c = 0; c < 3; ++c)
            out[11 + c] += slot[7 + c] * sigmoid_grad_from_value(sp.color[c]);
    }
}

}  // namespace dtgs
