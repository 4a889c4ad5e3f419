#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmas/tensor.hpp"

namespace cmas {

struct Bone {
  int parent = 0;
  int child = 0;
};

/// Tree of bones over J joints. Construction validates that the bones form a
/// tree rooted at `root`.
class SkeletonTopology {
 public:
  SkeletonTopology(int joints, std::vector<Bone> bones, int root,
                   std::vector<std::string> names = {});

  int joint_count() const { return joints_; }
  int bone_count() const { return static_cast<int>(bones_.size()); }
  int root() const { return root_; }
  const std::vector<Bone>& bones() const { return bones_; }
  const std::vector<std::string>& names() const { return names_; }

  /// Joint index by name, or -1.
  int find(const std::string& name) const;

  nlohmann::json to_json() const;
  static SkeletonTopology from_json(const nlohmann::json& j);

 private:
  int joints_;
  std::vector<Bone> bones_;
  int root_;
  std::vector<std::string> names_;
};

/// 13 joints, 12 bones, pelvis root:
///   pelvis-neck-head, neck-shoulder-elbow-wrist (x2), pelvis-knee-ankle (x2).
const SkeletonTopology& default_topology();

/// Bone lengths of frame `frame` of `seq`, ordered as topo.bones().
std::vector<double> bone_lengths(const Pose3DSequence& seq, int frame,
                                 const SkeletonTopology& topo);

/// (1/B) sum_i var_l(b_i^(l)), population variance over frames.
double bone_variance_loss(const Pose3DSequence& seq,
                          const SkeletonTopology& topo);

/// Gradient of bone_variance_loss w.r.t. every coordinate (L x J x 3).
/// Zero-length bones contribute nothing.
std::vector<double> bone_variance_gradient(const Pose3DSequence& seq,
                                           const SkeletonTopology& topo);

/// Accumulates scale * gradient into `grad`; returns scale * loss.
double accumulate_bone_variance(const Pose3DSequence& seq,
                                const SkeletonTopology& topo, double scale,
                                std::span<double> grad);

}  // namespace cmas
