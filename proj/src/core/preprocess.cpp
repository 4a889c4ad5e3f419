#include "cmas/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cmas/error.hpp"

namespace cmas {

void RawPoseTrack::validate() const {
  if (joints <= 0) fail(Errc::shape, "pose track: joint count must be positive");
  const std::size_t F = static_cast<std::size_t>(frames());
  if (coords.size() != F * joints * 2) fail(Errc::shape, "pose track: coordinates are not F x J x 2");
  if (!confidence.empty() && confidence.size() != F * joints) {
    fail(Errc::shape, "pose track: confidence is not F x J");
  }
  if (!mask.empty() && mask.size() != F * joints) fail(Errc::shape, "pose track: mask is not F x J");
  if (!frame_index.empty() && frame_index.size() != F) {
    fail(Errc::shape, "pose track: frame index list has the wrong length");
  }
  for (double c : confidence) {
    if (!(c >= 0.0 && c <= 1.0)) fail(Errc::domain, "pose track: confidence outside [0, 1]");
  }
}

RawPoseTrack RawPoseTrack::slice(int begin, int end) const {
  RawPoseTrack out;
  out.joints = joints;
  out.video_id = video_id;
  out.fps = fps;
  const std::size_t J = static_cast<std::size_t>(joints);
  const auto b = static_cast<std::size_t>(begin), e = static_cast<std::size_t>(end);
  out.coords.assign(coords.begin() + static_cast<std::ptrdiff_t>(b * J * 2),
                    coords.begin() + static_cast<std::ptrdiff_t>(e * J * 2));
  if (!confidence.empty()) {
    out.confidence.assign(confidence.begin() + static_cast<std::ptrdiff_t>(b * J),
                          confidence.begin() + static_cast<std::ptrdiff_t>(e * J));
  }
  if (!mask.empty()) {
    out.mask.assign(mask.begin() + static_cast<std::ptrdiff_t>(b * J),
                    mask.begin() + static_cast<std::ptrdiff_t>(e * J));
  }
  if (!frame_index.empty()) {
    out.frame_index.assign(frame_index.begin() + begin, frame_index.begin() + end);
  } else {
    for (int f = begin; f < end; ++f) out.frame_index.push_back(f);
  }
  return out;
}

RawPoseTrack filter_low_confidence(const RawPoseTrack& track, double threshold) {
  track.validate();
  RawPoseTrack out = track;
  if (track.confidence.empty()) return out;
  std::vector<std::uint8_t> mask = track.mask;
  if (mask.empty()) mask.assign(track.confidence.size(), 1);
  bool any_masked = false;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (track.confidence[i] < threshold) mask[i] = 0;
    any_masked = any_masked || mask[i] == 0;
  }
  out.mask = any_masked ? std::move(mask) : std::vector<std::uint8_t>{};
  return out;
}

double jump_norm(const RawPoseTrack& track, int frame) {
  double sum = 0.0;
  int count = 0;
  for (int j = 0; j < track.joints; ++j) {
    if (!track.observed(frame, j) || !track.observed(frame - 1, j)) continue;
    sum += (track.point(frame, j) - track.point(frame - 1, j)).squaredNorm();
    ++count;
  }
  if (count == 0) return std::numeric_limits<double>::infinity();
  return std::sqrt(sum / count);
}

std::vector<RawPoseTrack> segment_discontinuities(const RawPoseTrack& track, double threshold) {
  track.validate();
  std::vector<RawPoseTrack> out;
  const int F = track.frames();
  int begin = 0;
  for (int f = 1; f <= F; ++f) {
    if (f < F && !(jump_norm(track, f) > threshold)) continue;
    if (f - begin > 1) out.push_back(track.slice(begin, f));
    begin = f;
  }
  return out;
}

RawPoseTrack gaussian_smooth(const RawPoseTrack& track, double sigma_frames) {
  track.validate();
  if (!(sigma_frames > 0.0)) return track;
  const int F = track.frames();
  const int J = track.joints;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_frames));
  std::vector<double> kernel(static_cast<std::size_t>(radius) + 1);
  for (int d = 0; d <= radius; ++d) {
    kernel[static_cast<std::size_t>(d)] = std::exp(-0.5 * d * d / (sigma_frames * sigma_frames));
  }

  RawPoseTrack out = track;
  bool any_masked = false;
  for (int j = 0; j < J; ++j) {
    for (int f = 0; f < F; ++f) {
      double wsum = 0.0;
      Eigen::Vector2d acc = Eigen::Vector2d::Zero();
      for (int d = -radius; d <= radius; ++d) {
        const int g = f + d;
        if (g < 0 || g >= F || !track.observed(g, j)) continue;
        const double w = kernel[static_cast<std::size_t>(std::abs(d))];
        acc += w * track.point(g, j);
        wsum += w;
      }
      const std::size_t i = static_cast<std::size_t>(f) * J + j;
      if (wsum > 0.0) {
        out.coords[2 * i] = acc.x() / wsum;
        out.coords[2 * i + 1] = acc.y() / wsum;
        if (!out.mask.empty()) out.mask[i] = 1;
      } else {
        any_masked = true;
      }
    }
  }
  if (!any_masked) out.mask.clear();
  return out;
}

NormalizedTrack normalize(const RawPoseTrack& track, const CameraView& reference_view,
                          const NormalizeOptions& options) {
  track.validate();
  const int F = track.frames();
  if (options.root < 0 || options.root >= track.joints || options.neck < 0 ||
      options.neck >= track.joints) {
    fail(Errc::domain, "normalize: root/neck joint index out of range");
  }
  Eigen::Vector2d root_sum = Eigen::Vector2d::Zero();
  int root_count = 0;
  std::vector<double> torso;
  for (int f = 0; f < F; ++f) {
    bool any = false;
    for (int j = 0; j < track.joints && !any; ++j) any = track.observed(f, j);
    if (!any) fail(Errc::domain, "normalize: frame " + std::to_string(f) + " has no observed joint");
    if (track.observed(f, options.root)) {
      root_sum += track.point(f, options.root);
      ++root_count;
      if (track.observed(f, options.neck)) {
        torso.push_back((track.point(f, options.neck) - track.point(f, options.root)).norm());
      }
    }
  }
  if (root_count == 0 || torso.empty()) {
    fail(Errc::domain, "normalize: root and neck are never observed together");
  }
  auto mid = torso.begin() + static_cast<std::ptrdiff_t>(torso.size() / 2);
  std::nth_element(torso.begin(), mid, torso.end());
  double median = *mid;
  if (torso.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(torso.begin(), mid));
  }
  if (!(median > 0.0)) fail(Errc::domain, "normalize: degenerate zero torso length");

  const double target = reference_view.focal * options.torso_length / options.distance;
  NormalizedTrack out;
  out.transform.scale = target / median;
  out.transform.offset = reference_view.principal_point - out.transform.scale * (root_sum / root_count);
  out.track = track;
  for (std::size_t i = 0; i + 1 < out.track.coords.size(); i += 2) {
    const Eigen::Vector2d p = out.transform.apply({track.coords[i], track.coords[i + 1]});
    out.track.coords[i] = p.x();
    out.track.coords[i + 1] = p.y();
  }
  return out;
}

RawPoseTrack denormalize(const RawPoseTrack& track, const NormalizationTransform& transform) {
  RawPoseTrack out = track;
  for (std::size_t i = 0; i + 1 < out.coords.size(); i += 2) {
    const Eigen::Vector2d p = transform.invert({track.coords[i], track.coords[i + 1]});
    out.coords[i] = p.x();
    out.coords[i + 1] = p.y();
  }
  return out;
}

Pose2DSequence to_sequence(const RawPoseTrack& track) {
  track.validate();
  Pose2DSequence s(track.frames(), track.joints);
  s.coords = track.coords;
  s.confidence = track.confidence;
  s.mask = track.mask;
  return s;
}

std::vector<PreparedSegment> preprocess(const RawPoseTrack& track, const CameraView& reference_view,
                                        const PreprocessOptions& options) {
  const RawPoseTrack filtered = filter_low_confidence(track, options.confidence_threshold);
  const int F = filtered.frames();
  // Frames with no surviving joint split the track; the rest share one
  // normalization.
  std::vector<std::pair<int, int>> runs;
  RawPoseTrack kept;
  kept.joints = filtered.joints;
  kept.video_id = filtered.video_id;
  kept.fps = filtered.fps;
  const bool masked = !filtered.mask.empty();
  for (int f = 0; f < F;) {
    auto any_observed = [&](int g) {
      for (int j = 0; j < filtered.joints; ++j)
        if (filtered.observed(g, j)) return true;
      return false;
    };
    if (!any_observed(f)) {
      ++f;
      continue;
    }
    int g = f;
    while (g < F && any_observed(g)) ++g;
    const int offset = kept.frames();
    const RawPoseTrack part = filtered.slice(f, g);
    kept.coords.insert(kept.coords.end(), part.coords.begin(), part.coords.end());
    kept.confidence.insert(kept.confidence.end(), part.confidence.begin(), part.confidence.end());
    if (masked) kept.mask.insert(kept.mask.end(), part.mask.begin(), part.mask.end());
    kept.frame_index.insert(kept.frame_index.end(), part.frame_index.begin(), part.frame_index.end());
    runs.emplace_back(offset, offset + (g - f));
    f = g;
  }
  std::vector<PreparedSegment> out;
  if (runs.empty()) return out;
  const NormalizedTrack normalized = normalize(kept, reference_view, options.normalize);
  for (const auto& [begin, end] : runs) {
    for (const RawPoseTrack& seg : segment_discontinuities(normalized.track.slice(begin, end),
                                                           options.continuity_threshold)) {
      out.push_back({gaussian_smooth(seg, options.sigma_frames), normalized.transform});
    }
  }
  return out;
}

}  // namespace cmas
