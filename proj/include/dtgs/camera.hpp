#pragma once

#include "dtgs/math.hpp"

namespace dtgs {

/// Pinhole camera. Camera frame: x right, y down, z forward; pixel (x, y) sample
/// points sit at (x + 0.5, y + 0.5).
struct Camera {
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
    Mat3 rotation = Mat3::Identity();  // world-to-camera
    Vec3 translation = Vec3::Zero();

    Vec3 world_to_camera(const Vec3& p) const { return rotation * p + translation; }

    Vec2 project(const Vec3& cam_point) const {
        return Vec2(fx * cam_point.x() / cam_point.z() + cx,
                    fy * cam_point.y() / cam_point.z() + cy);
    }

    /// Ray through pixel sample (x + 0.5, y + 0.5), returned in world space.
    void pixel_ray(int y, int x, Vec3& origin, Vec3& dir) const {
        const Vec3 d_cam((x + 0.5 - cx) / fx, (y + 0.5 - cy) / fy, 1.0);
        origin = -(rotation.transpose() * translation);
        dir = (rotation.transpose() * d_cam).normalized();
    }

    bool valid() const {
        if (!(fx > 0.0) || !(fy > 0.0) || width <= 0 || height <= 0) return false;
        return (rotation * rotation.transpose() - Mat3::Identity()).norm() < 1e-9;
    }
};

/// Camera at `eye` looking at `target`, world +z up, y-down image convention.
inline Camera make_lookat_camera(const Vec3& eye, const Vec3& target, double fov_y_deg,
                                 int width, int height) {
    Camera cam;
    cam.width = width;
    cam.height = height;
    const double fov = fov_y_deg * M_PI / 180.0;
    cam.fy = 0.5 * height / std::tan(0.5 * fov);
    cam.fx = cam.fy;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;

    const Vec3 forward = (target - eye).normalized();
    Vec3 up_world(0.0, 0.0, 1.0);
    if (std::abs(forward.dot(up_world)) > 0.999) up_world = Vec3(0.0, 1.0, 0.0);
    const Vec3 right = forward.cross(up_world).normalized();
    const Vec3 down = forward.cross(right);  // unit: forward and right are orthonormal

    // Rows of the world-to-camera rotation are the camera axes in world space.
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -(cam.rotation * eye);
    return cam;
}

}  // namespace dtgs
