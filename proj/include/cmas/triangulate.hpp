#pragma once

#include <span>
#include <vector>

#include "cmas/camera.hpp"
#include "cmas/skeleton.hpp"
#include "cmas/tensor.hpp"

namespace cmas {

/// Per-view weights of the reprojection loss: w_ref on the reference view,
/// (1 - w_ref) / (V - 1) on each other view.
struct ViewWeights {
  std::vector<double> values;
  int reference_index = 0;
};

ViewWeights view_weights(int views, double w_ref, int reference_index);

struct OptimizerSettings {
  double learning_rate = 0.01;
  int iterations = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Iterates closer than this to any camera plane are pushed back along the
  /// camera's optical axis.
  double min_depth = 0.1;

  void validate() const;
};

/// sum_v a_v ||P(X, v) - target_v||^2 over observed entries.
double geometry_loss(const Pose3DSequence& X, std::span<const Pose2DSequence> targets,
                     const CameraRig& rig, const ViewWeights& weights);

double total_loss(const Pose3DSequence& X, std::span<const Pose2DSequence> targets,
                  const CameraRig& rig, const ViewWeights& weights,
                  double lambda_bone, const SkeletonTopology& topo);

/// Gradient of total_loss w.r.t. X (L x J x 3). Pass lambda_bone = 0 for the
/// geometry term alone.
std::vector<double> total_loss_gradient(const Pose3DSequence& X,
                                        std::span<const Pose2DSequence> targets,
                                        const CameraRig& rig, const ViewWeights& weights,
                                        double lambda_bone, const SkeletonTopology& topo);

struct TriangulationResult {
  Pose3DSequence pose;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  /// Number of optimizer iterations at which some joint had to be pushed back
  /// in front of a camera.
  int depth_clamps = 0;
};

/// Minimizes total_loss from `init` with Adam and returns the best iterate
/// seen, so final_loss <= initial_loss.
TriangulationResult triangulate(std::span<const Pose2DSequence> targets,
                                const CameraRig& rig, const ViewWeights& weights,
                                double lambda_bone, const SkeletonTopology& topo,
                                const Pose3DSequence& init,
                                const OptimizerSettings& settings = {});

}  // namespace cmas
