#pragma once

#include "dtgs/math.hpp"

namespace dtgs {

/// One scene primitive. All fields are raw (unconstrained) optimizer parameters;
/// opacity/color activate through sigmoid, scales through exp.
struct Gaussian3D {
    Vec3 position = Vec3::Zero();
    Vec3 log_scale = Vec3::Zero();       // per-axis stddev in log space
    Vec4 rotation = Vec4(1, 0, 0, 0);    // quaternion (w, x, y, z)
    double opacity_logit = 0.0;
    Vec3 color_raw = Vec3::Zero();       // sigmoid -> RGB in [0,1]

    bool all_finite() const {
        return position.allFinite() && log_scale.allFinite() && rotation.allFinite() &&
               std::isfinite(opacity_logit) && color_raw.allFinite();
    }
};

/// World-space covariance R * diag(exp(2*log_scale)) * R^T. The quaternion is
/// normalized here so the map stays well-defined mid-optimization.
inline Mat3 covariance_of(const Gaussian3D& g) {
    const double n = g.rotation.norm();
    if (!(n > 0.0)) throw NumericalError("covariance_of: zero quaternion (degenerate rotation)");
    const Mat3 r = rotation_from_unit_quat(g.rotation / n);
    const Vec3 d(std::exp(2.0 * g.log_scale.x()), std::exp(2.0 * g.log_scale.y()),
                 std::exp(2.0 * g.log_scale.z()));
    return r * d.asDiagonal() * r.transpose();
}

struct Activated {
    double opacity;
    Vec3 color;
};

inline Activated activate(const Gaussian3D& g) {
    return {sigmoid(g.opacity_logit),
            Vec3(sigmoid(g.color_raw.x()), sigmoid(g.color_raw.y()), sigmoid(g.color_raw.z()))};
}

}  // namespace dtgs
