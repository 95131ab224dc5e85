#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dtgs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Thrown on bad user input (malformed configs, missing files, shape mismatches).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when a numerical contract is violated (non-finite loss/gradient).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// d/dx sigmoid(x), expressed through the activated value.
inline double sigmoid_grad_from_value(double s) { return s * (1.0 - s); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline double softplus(double x) {
    if (x > 30.0) return x;  // exp overflow guard; exact to double precision
    return std::log1p(std::exp(x));
}

/// Inverse of softplus, valid for y > 0.
inline double softplus_inverse(double y) { return std::log(std::expm1(y)); }

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

/// Subgradient convention: sign(0) = 0.
inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Quaternion as (w, x, y, z); rotation matrix for the *unit* quaternion.
inline Mat3 rotation_from_unit_quat(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
         2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
         2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

/// Partial derivatives of rotation_from_unit_quat w.r.t. the four unit-quaternion
/// components. k: 0=w 1=x 2=y 3=z.
inline Mat3 rotation_grad_unit_quat(const Vec4& q, int k) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 d;
    switch (k) {
        case 0:
            d << 0, -z, y,
                 z, 0, -x,
                 -y, x, 0;
            break;
        case 1:
            d << 0, y, z,
                 y, -2 * x, -w,
                 z, w, -2 * x;
            break;
        case 2:
            d << -2 * y, x, w,
                 x, 0, z,
                 -w, z, -2 * y;
            break;
        default:
            d << -2 * z, -w, x,
                 w, -2 * z, y,
                 x, y, 0;
            break;
    }
    return 2.0 * d;
}

}  // namespace dtgs
