#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sagseg/errors.hpp"

namespace sagseg {

/// Added to the projected covariance diagonal (px^2); anti-aliasing floor.
inline constexpr double kCov2dRegularization = 0.3;

/**
 * Pinhole camera, OpenCV convention: x right, y down, z forward.
 *
 * Pixel (i, j) spans [i, i+1) x [j, j+1); a continuous projection (u, v)
 * falls in pixel (floor(u), floor(v)).
 */
struct Camera {
  std::string id = "0";
  int width = 0;
  int height = 0;
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Eigen::Matrix4d world_to_camera = Eigen::Matrix4d::Identity();
  double near_plane = 0.01;

  Eigen::Matrix3d rotation() const { return world_to_camera.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return world_to_camera.topRightCorner<3, 1>(); }

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation() * world + translation();
  }

  /// Camera center in world coordinates.
  Eigen::Vector3d center() const { return -rotation().transpose() * translation(); }

  /// Throws ConfigError when intrinsics or the rigid transform are invalid.
  void validate() const {
    const std::string who = "camera '" + id + "': ";
    if (width <= 0 || height <= 0) throw ConfigError(who + "resolution must be positive");
    if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError(who + "focal lengths must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
      throw ConfigError(who + "principal point outside the image");
    }
    if (!(near_plane > 0.0)) throw ConfigError(who + "near plane must be positive");
    if (!world_to_camera.allFinite()) throw ConfigError(who + "non-finite extrinsics");
    const Eigen::RowVector4d last = world_to_camera.row(3);
    if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9) {
      throw ConfigError(who + "world_to_camera last row must be (0,0,0,1)");
    }
    const Eigen::Matrix3d r = rotation();
    if (std::abs(r.determinant()) < 1e-9) throw ConfigError(who + "singular rotation block");
    if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
        r.determinant() < 0.0) {
      throw ConfigError(who + "rotation block is not orthonormal");
    }
  }
};

/// Ordered cameras sharing one resolution; optional parallel mask paths.
struct ViewSet {
  std::vector<Camera> cameras;
  std::vector<std::string> mask_paths;

  std::size_t size() const { return cameras.size(); }
  int width() const { return cameras.empty() ? 0 : cameras.front().width; }
  int height() const { return cameras.empty() ? 0 : cameras.front().height; }

  void validate() const {
    if (cameras.empty()) throw ConfigError("T >= 1 required: camera list is empty");
    for (const auto& cam : cameras) {
      cam.validate();
      if (cam.width != cameras.front().width || cam.height != cameras.front().height) {
        throw ConfigError("camera '" + cam.id + "' resolution " + std::to_string(cam.width) +
                          "x" + std::to_string(cam.height) + " differs from " +
                          std::to_string(width()) + "x" + std::to_string(height()));
      }
    }
    if (!mask_paths.empty() && mask_paths.size() != cameras.size()) {
      throw ConfigError("mask path list is not parallel to the camera list");
    }
  }
};

/// Continuous pixel coordinates of a camera-space point; no clipping.
inline Eigen::Vector2d pinhole(const Camera& cam, const Eigen::Vector3d& p_cam) {
  return {cam.fx * p_cam.x() / p_cam.z() + cam.cx, cam.fy * p_cam.y() / p_cam.z() + cam.cy};
}

/// Projects a world point. Empty when the point lies at or behind the near
/// plane or lands outside [0, W) x [0, H).
inline std::optional<Eigen::Vector2d> project_point(const Camera& cam,
                                                    const Eigen::Vector3d& world) {
  const Eigen::Vector3d pc = cam.to_camera(world);
  if (!(pc.z() > cam.near_plane)) return std::nullopt;
  const Eigen::Vector2d uv = pinhole(cam, pc);
  if (!(uv.x() >= 0.0 && uv.x() < cam.width && uv.y() >= 0.0 && uv.y() < cam.height)) {
    return std::nullopt;
  }
  return uv;
}

/// Sigma = R S S^T R^T with S = diag(scale).
inline Eigen::Matrix3d world_covariance(const Eigen::Vector3d& scale,
                                        const Eigen::Quaterniond& rotation) {
  const Eigen::Matrix3d r = rotation.normalized().toRotationMatrix();
  const Eigen::Matrix3d m = r * scale.asDiagonal();
  return m * m.transpose();
}

/// Jacobian of the pinhole map at a camera-space point.
inline Eigen::Matrix<double, 2, 3> pinhole_jacobian(const Camera& cam,
                                                     const Eigen::Vector3d& p_cam) {
  const double inv_z = 1.0 / p_cam.z();
  const double inv_z2 = inv_z * inv_z;
  Eigen::Matrix<double, 2, 3> j;
  j << cam.fx * inv_z, 0.0, -cam.fx * p_cam.x() * inv_z2,
      0.0, cam.fy * inv_z, -cam.fy * p_cam.y() * inv_z2;
  return j;
}

/// First-order (EWA) projection of a world covariance to screen space, plus
/// the diagonal regularization. Callers must cull points behind the near
/// plane first; doing otherwise is a contract error.
inline Eigen::Matrix2d project_covariance(const Camera& cam, const Eigen::Vector3d& position,
                                          const Eigen::Matrix3d& cov3d,
                                          double regularization = kCov2dRegularization) {
  const Eigen::Vector3d pc = cam.to_camera(position);
  if (!(pc.z() > cam.near_plane)) {
    throw ContractError("project_covariance called for a point behind the near plane");
  }
  const Eigen::Matrix<double, 2, 3> t = pinhole_jacobian(cam, pc) * cam.rotation();
  Eigen::Matrix2d cov2d = t * cov3d * t.transpose();
  cov2d(0, 1) = cov2d(1, 0) = 0.5 * (cov2d(0, 1) + cov2d(1, 0));
  cov2d.diagonal().array() += regularization;
  return cov2d;
}

/// Rigid world-to-camera transform for a camera at `eye` looking at `target`
/// with `up` as the approximate world up direction.
inline Eigen::Matrix4d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                               const Eigen::Vector3d& up) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d right = forward.cross(up);
  if (right.norm() < 1e-12) right = forward.cross(Eigen::Vector3d::UnitX());
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d r;
  r.row(0) = right;
  r.row(1) = down;
  r.row(2) = forward;
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = -r * eye;
  return m;
}

}  // namespace sagseg
