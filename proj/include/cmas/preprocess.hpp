#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cmas/camera.hpp"
#include "cmas/tensor.hpp"

namespace cmas {

/// Raw per-frame 2D keypoints as delivered by an upstream estimator.
struct RawPoseTrack {
  int joints = 0;
  std::vector<double> coords;        // F x J x 2
  std::vector<double> confidence;    // F x J, in [0, 1]
  std::vector<std::uint8_t> mask;    // empty (all observed) or F x J
  std::vector<int> frame_index;      // source frame number per row
  std::string video_id;
  double fps = 0.0;

  int frames() const { return joints == 0 ? 0 : static_cast<int>(coords.size() / (2 * static_cast<std::size_t>(joints))); }
  bool observed(int f, int j) const {
    return mask.empty() || mask[static_cast<std::size_t>(f) * joints + j] != 0;
  }
  Eigen::Vector2d point(int f, int j) const {
    const std::size_t i = (static_cast<std::size_t>(f) * joints + j) * 2;
    return {coords[i], coords[i + 1]};
  }
  void validate() const;
  /// Rows [begin, end) as a new track.
  RawPoseTrack slice(int begin, int end) const;
};

inline constexpr double kConfidenceThreshold = 0.3;
inline constexpr double kContinuityThreshold = 0.5;

/// Masks joints whose confidence is strictly below `threshold`.
RawPoseTrack filter_low_confidence(const RawPoseTrack& track,
                                   double threshold = kConfidenceThreshold);

/// RMS over joints (observed in both frames) of the per-joint displacement.
/// Infinite when no joint is observed in both frames.
double jump_norm(const RawPoseTrack& track, int frame);

/// Cuts between f-1 and f wherever jump_norm(f) > threshold; drops segments
/// of a single frame.
std::vector<RawPoseTrack> segment_discontinuities(const RawPoseTrack& track,
                                                  double threshold = kContinuityThreshold);

/// Mask-aware temporal Gaussian filter per joint coordinate (radius
/// ceil(3 sigma), renormalized). Masked samples with an observed neighbour
/// inside the radius are filled and unmasked. sigma <= 0 is the identity.
RawPoseTrack gaussian_smooth(const RawPoseTrack& track, double sigma_frames = 1.0);

/// normalized = scale * raw + offset.
struct NormalizationTransform {
  double scale = 1.0;
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const { return scale * p + offset; }
  Eigen::Vector2d invert(const Eigen::Vector2d& p) const { return (p - offset) / scale; }
};

struct NormalizeOptions {
  int root = 0;
  int neck = 1;
  /// Torso length of the canonical 2 m subject, meters.
  double torso_length = 0.6;
  /// Subject distance used to convert it to image units.
  double distance = 7.0;
};

struct NormalizedTrack {
  RawPoseTrack track;  // coordinates in normalized image units
  NormalizationTransform transform;
};

/// Centers the mean root on the principal point and scales the median
/// root-neck distance to the canonical projected torso length.
NormalizedTrack normalize(const RawPoseTrack& track, const CameraView& reference_view,
                          const NormalizeOptions& options = {});

RawPoseTrack denormalize(const RawPoseTrack& track, const NormalizationTransform& transform);

Pose2DSequence to_sequence(const RawPoseTrack& track);

struct PreprocessOptions {
  double confidence_threshold = kConfidenceThreshold;
  double continuity_threshold = kContinuityThreshold;
  double sigma_frames = 1.0;
  NormalizeOptions normalize;
};

struct PreparedSegment {
  RawPoseTrack track;
  NormalizationTransform transform;
};

/// filter -> normalize -> segment -> smooth.
std::vector<PreparedSegment> preprocess(const RawPoseTrack& track, const CameraView& reference_view,
                                        const PreprocessOptions& options = {});

}  // namespace cmas
