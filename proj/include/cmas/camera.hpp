#pragma once

#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cmas/tensor.hpp"

namespace cmas {

/// Pinhole camera. World point X maps to camera frame R (X - c) with camera
/// center c = -R^T t; image = pp + focal * (x/z, y/z). Camera axes are
/// x right, y down, z forward.
struct CameraView {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double focal = 1.0;
  Eigen::Vector2d principal_point = Eigen::Vector2d::Zero();

  Eigen::Vector3d center() const { return -rotation.transpose() * translation; }
  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation * world + translation;
  }
  /// Throws Errc::domain unless R is a proper rotation (1e-9) and focal > 0.
  void validate() const;
};

struct RigParams {
  double distance = 7.0;
  double elevation = std::numbers::pi / 16.0;
  Eigen::Vector3d subject_center = Eigen::Vector3d::Zero();
};

struct CameraRig {
  std::vector<CameraView> views;
  int reference_index = 0;

  int size() const { return static_cast<int>(views.size()); }
  const CameraView& reference() const { return views.at(reference_index); }
  void validate() const;

  nlohmann::json to_json() const;
  static CameraRig from_json(const nlohmann::json& j);
};

/// V cameras on a ring around the subject: equal distance and elevation,
/// azimuth 2*pi*k/V, each looking at the subject center. Intrinsics are
/// focal = distance, principal point (0, 0).
CameraRig make_rig(int views, const RigParams& params = {},
                   int reference_index = 0);

/// Camera looking at `target` from `eye` with world up +y.
CameraView look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                   double focal, const Eigen::Vector2d& principal_point);

/// Throws Errc::projection on nonpositive depth, naming frame and joint.
Pose2DSequence project(const Pose3DSequence& seq, const CameraView& view);

Eigen::Vector2d project_point(const Eigen::Vector3d& world,
                              const CameraView& view);

/// J^T r per joint, J = d(image)/d(world point). `residual` is L x J x 2.
std::vector<double> project_gradient(const Pose3DSequence& seq,
                                     const CameraView& view,
                                     std::span<const double> residual);

/// Rotates each 3-vector into the camera frame and drops depth. Maps
/// N(0, I_3) noise to N(0, I_2) noise.
std::vector<double> project_noise(std::span<const double> noise3d,
                                  const CameraView& view);

/// Places every joint on its viewing ray at camera-frame depth `depth`.
Pose3DSequence backproject(const Pose2DSequence& seq, const CameraView& view,
                           double depth);

}  // namespace cmas
