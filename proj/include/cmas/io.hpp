#pragma once

#include <string>
#include <vector>

#include "cmas/eval.hpp"
#include "cmas/preprocess.hpp"
#include "cmas/sampler.hpp"
#include "cmas/tensor.hpp"

namespace cmas {

/// One JSON object per line: {"f": idx, "xy": [[x,y] x J], "mask": [bool x J]}.
std::string pose2d_to_jsonl(const Pose2DSequence& seq, const std::vector<int>& frame_index = {});
void write_pose2d_jsonl(const std::string& path, const Pose2DSequence& seq,
                        const std::vector<int>& frame_index = {});
Pose2DSequence read_pose2d_jsonl(const std::string& path, std::vector<int>* frame_index = nullptr);

/// One JSON object per line: {"f": idx, "xyz": [[x,y,z] x J]}.
std::string pose3d_to_jsonl(const Pose3DSequence& seq, const std::vector<int>& frame_index = {});
void write_pose3d_jsonl(const std::string& path, const Pose3DSequence& seq,
                        const std::vector<int>& frame_index = {});
Pose3DSequence read_pose3d_jsonl(const std::string& path, std::vector<int>* frame_index = nullptr);

/// {"t": step, "loss": ..., "ref_err": ..., "bone_var": ...} per line.
/// A non-negative `window` adds a "window" field to every row.
std::string diagnostics_to_jsonl(const std::vector<StepDiagnostics>& diagnostics, int window = -1);

/// Source keypoint index (or indices, averaged) for every topology joint.
struct JointMap {
  int source_joints = 0;
  std::vector<std::vector<int>> sources;

  int joints() const { return static_cast<int>(sources.size()); }
};

/// COCO-17 keypoints onto the default 13-joint topology; pelvis and neck are
/// hip and shoulder midpoints.
JointMap coco17_joint_map();
/// {"source_joints": K, "map": [i | [i, k, ...], ...]}
JointMap load_joint_map(const std::string& path);

/// JSON array of frames, each {"keypoints": [x0, y0, c0, x1, y1, c1, ...]}.
/// Averaged joints take the minimum confidence of their sources.
RawPoseTrack read_alphapose(const std::string& path, const JointMap& map);
RawPoseTrack parse_alphapose(const std::string& text, const JointMap& map);

/// motion_NNNN_3d.jsonl plus motion_NNNN_viewV.jsonl for each rig view.
void write_dataset(const std::string& dir, const SyntheticDataset& dataset);
SyntheticDataset read_dataset(const std::string& dir);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace cmas
