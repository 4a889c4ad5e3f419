#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace cmas {

/// L x J x 3 joint coordinates in meters, world frame, row-major.
struct Pose3DSequence {
  int frames = 0;
  int joints = 0;
  std::vector<double> coords;

  Pose3DSequence() = default;
  Pose3DSequence(int frames_, int joints_)
      : frames(frames_), joints(joints_),
        coords(static_cast<std::size_t>(frames_) * joints_ * 3, 0.0) {}

  std::size_t size() const { return coords.size(); }
  std::size_t index(int l, int j) const {
    return (static_cast<std::size_t>(l) * joints + j) * 3;
  }

  Eigen::Map<Eigen::Vector3d> at(int l, int j) {
    return Eigen::Map<Eigen::Vector3d>(coords.data() + index(l, j));
  }
  Eigen::Map<const Eigen::Vector3d> at(int l, int j) const {
    return Eigen::Map<const Eigen::Vector3d>(coords.data() + index(l, j));
  }

  bool all_finite() const;
};

/// L x J x 2 image coordinates in normalized units. `confidence` and
/// `mask` are either empty or hold L x J entries; an empty mask means every
/// joint is observed.
struct Pose2DSequence {
  int frames = 0;
  int joints = 0;
  std::vector<double> coords;
  std::vector<double> confidence;
  std::vector<std::uint8_t> mask;

  Pose2DSequence() = default;
  Pose2DSequence(int frames_, int joints_)
      : frames(frames_), joints(joints_),
        coords(static_cast<std::size_t>(frames_) * joints_ * 2, 0.0) {}

  std::size_t size() const { return coords.size(); }
  std::size_t index(int l, int j) const {
    return (static_cast<std::size_t>(l) * joints + j) * 2;
  }

  Eigen::Map<Eigen::Vector2d> at(int l, int j) {
    return Eigen::Map<Eigen::Vector2d>(coords.data() + index(l, j));
  }
  Eigen::Map<const Eigen::Vector2d> at(int l, int j) const {
    return Eigen::Map<const Eigen::Vector2d>(coords.data() + index(l, j));
  }

  bool observed(int l, int j) const {
    return mask.empty() ||
           mask[static_cast<std::size_t>(l) * joints + j] != 0;
  }
  bool has_mask() const { return !mask.empty(); }

  /// Throws Errc::shape / Errc::domain if the invariants do not hold.
  void validate() const;
};

}  // namespace cmas
