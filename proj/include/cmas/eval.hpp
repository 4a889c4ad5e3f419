#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmas/camera.hpp"
#include "cmas/rng.hpp"
#include "cmas/skeleton.hpp"
#include "cmas/tensor.hpp"

namespace cmas {

enum class Alignment { none, root, procrustes };

Alignment parse_alignment(const std::string& name);
const char* alignment_name(Alignment a);

/// Mean per-joint position error in millimeters (inputs in meters).
/// `root` subtracts the root joint per frame; `procrustes` applies one
/// similarity transform per sequence.
double mpjpe(const Pose3DSequence& pred, const Pose3DSequence& gt, Alignment alignment,
             int root_index = 0);

struct MotionParams {
  /// Scales every joint-angle amplitude; 0 gives a static pose.
  double amplitude = 1.0;
  /// Heading offset drawn uniformly from [-yaw_range, yaw_range] radians.
  double yaw_range = 0.35;
  /// Peak horizontal root displacement in meters.
  double root_sway = 0.05;
  double min_period = 16.0;  // frames
  double max_period = 48.0;
};

/// Rigid skeleton animated by sinusoidal bone rotations composed along the
/// tree, plus slow heading change and root sway. Bone lengths are constant.
Pose3DSequence synth_motion(const SkeletonTopology& topo, int frames, RngStream& rng,
                            const MotionParams& params = {});

struct SyntheticDataset {
  std::vector<Pose3DSequence> motions;
  /// projections[v][n] is motion n seen from rig view v.
  std::vector<std::vector<Pose2DSequence>> projections;
};

SyntheticDataset make_dataset(int count, const SkeletonTopology& topo, const CameraRig& rig,
                              int frames, RngStream& rng, const MotionParams& params = {});

/// Every joint placed on its viewing ray at camera-frame depth `depth`.
Pose3DSequence baseline_lift(const Pose2DSequence& input2d, const CameraView& reference_view,
                             double depth);

}  // namespace cmas
