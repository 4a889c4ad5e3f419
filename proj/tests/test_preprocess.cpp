#include <doctest.h>

#include <cmath>

#include "cmas/error.hpp"
#include "cmas/preprocess.hpp"

using namespace cmas;

namespace {

RawPoseTrack constant_track(int F, int J, double x = 0.1, double y = -0.2) {
  RawPoseTrack t;
  t.joints = J;
  for (int f = 0; f < F; ++f) {
    for (int j = 0; j < J; ++j) {
      t.coords.push_back(x + 0.05 * j);
      t.coords.push_back(y - 0.03 * j);
      t.confidence.push_back(1.0);
    }
  }
  return t;
}

// Shifts every joint of frames >= f by (dx, 0).
void shift_from(RawPoseTrack& t, int f, double dx) {
  for (int g = f; g < t.frames(); ++g) {
    for (int j = 0; j < t.joints; ++j) t.coords[(static_cast<std::size_t>(g) * t.joints + j) * 2] += dx;
  }
}

// Canonical track: root at the origin, neck 0.6 above it, small sway.
RawPoseTrack canonical_track(int F) {
  RawPoseTrack t;
  t.joints = 3;
  for (int f = 0; f < F; ++f) {
    const double s = f % 2 ? 0.01 : -0.01;
    const double pts[6] = {s, 0.0, s, -0.6, s + 0.2, -0.3};
    t.coords.insert(t.coords.end(), pts, pts + 6);
    for (int j = 0; j < 3; ++j) t.confidence.push_back(0.9);
  }
  return t;
}

}  // namespace

TEST_CASE("confidence filter masks strictly below the threshold") {
  RawPoseTrack t = constant_track(1, 2);
  t.confidence = {0.29, 0.30};
  const RawPoseTrack f = filter_low_confidence(t);
  REQUIRE(f.mask.size() == 2);
  CHECK(f.mask[0] == 0);
  CHECK(f.mask[1] == 1);
  CHECK(f.coords == t.coords);

  const RawPoseTrack all = filter_low_confidence(constant_track(4, 3));
  CHECK(all.mask.empty());
  CHECK(all.coords == constant_track(4, 3).coords);

  RawPoseTrack alt = constant_track(5, 4);
  for (std::size_t i = 0; i < alt.confidence.size(); ++i) alt.confidence[i] = i % 2 ? 0.9 : 0.1;
  const RawPoseTrack half = filter_low_confidence(alt);
  int masked = 0;
  for (auto m : half.mask) masked += m == 0;
  CHECK(masked == 10);
}

TEST_CASE("segmentation splits at the violating frames") {
  CHECK(segment_discontinuities(constant_track(20, 3)).size() == 1);

  RawPoseTrack one = constant_track(20, 3);
  shift_from(one, 8, 0.6);
  auto segs = segment_discontinuities(one);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].frames() == 8);
  CHECK(segs[1].frames() == 12);
  CHECK(segs[1].frame_index.front() == 8);

  RawPoseTrack two = constant_track(20, 3);
  shift_from(two, 5, 0.6);
  shift_from(two, 14, -0.6);
  segs = segment_discontinuities(two);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].frame_index.front() == 0);
  CHECK(segs[1].frame_index.front() == 5);
  CHECK(segs[2].frame_index.front() == 14);

  // a jump exactly at the threshold does not cut
  RawPoseTrack edge = constant_track(10, 3);
  shift_from(edge, 4, 0.5);
  CHECK(segment_discontinuities(edge).size() == 1);

  // a jump of 0.6 in one joint out of four has RMS norm 0.3
  RawPoseTrack rms = constant_track(10, 4);
  for (int g = 6; g < 10; ++g) rms.coords[(static_cast<std::size_t>(g) * 4) * 2] += 0.6;
  CHECK(jump_norm(rms, 6) == doctest::Approx(0.3));
  CHECK(segment_discontinuities(rms).size() == 1);

  // isolated single frames are dropped
  RawPoseTrack lone = constant_track(10, 3);
  shift_from(lone, 9, 1.0);
  segs = segment_discontinuities(lone);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].frames() == 9);
}

TEST_CASE("temporal smoothing") {
  const RawPoseTrack c = constant_track(12, 3);
  const RawPoseTrack s = gaussian_smooth(c, 1.0);
  for (std::size_t i = 0; i < c.coords.size(); ++i) CHECK(s.coords[i] == doctest::Approx(c.coords[i]).epsilon(1e-14));
  CHECK(gaussian_smooth(c, 0.0).coords == c.coords);

  RawPoseTrack imp = constant_track(21, 1, 0.0, 0.0);
  const double h = 2.0;
  imp.coords[2 * 10] = h;
  const RawPoseTrack out = gaussian_smooth(imp, 1.0);
  double ksum = 0.0;
  for (int d = -3; d <= 3; ++d) ksum += std::exp(-0.5 * d * d);
  CHECK(out.coords[2 * 10] == doctest::Approx(h / ksum));
  for (int d = 1; d <= 3; ++d) {
    CHECK(out.coords[2 * (10 + d)] == doctest::Approx(out.coords[2 * (10 - d)]));
    CHECK(out.coords[2 * (10 + d)] == doctest::Approx(h * std::exp(-0.5 * d * d) / ksum));
  }
  CHECK(out.coords[2 * 14] == 0.0);
}

TEST_CASE("smoothing fills masked samples from observed neighbours") {
  RawPoseTrack t = constant_track(9, 2);
  t.mask.assign(18, 1);
  t.mask[4 * 2 + 1] = 0;
  t.coords[(4 * 2 + 1) * 2] = 100.0;  // garbage under the mask
  const RawPoseTrack s = gaussian_smooth(t, 1.0);
  CHECK(s.mask.empty());
  CHECK(s.coords[(4 * 2 + 1) * 2] == doctest::Approx(0.15));
}

TEST_CASE("normalization") {
  const CameraView view;  // focal 1, principal point 0
  NormalizeOptions opts;
  opts.distance = 1.0;  // projected canonical torso = 0.6
  const RawPoseTrack canon = canonical_track(8);
  const NormalizedTrack id = normalize(canon, view, opts);
  CHECK(id.transform.scale == doctest::Approx(1.0));
  CHECK(id.transform.offset.norm() < 1e-12);

  RawPoseTrack raw = canon;
  const Eigen::Vector2d off(3.0, -1.5);
  for (std::size_t i = 0; i < raw.coords.size(); i += 2) {
    raw.coords[i] = 2.0 * raw.coords[i] + off.x();
    raw.coords[i + 1] = 2.0 * raw.coords[i + 1] + off.y();
  }
  const NormalizedTrack n = normalize(raw, view, opts);
  CHECK(n.transform.scale == doctest::Approx(0.5));
  CHECK((n.transform.offset + 0.5 * off).norm() < 1e-12);
  for (std::size_t i = 0; i < canon.coords.size(); ++i) CHECK(n.track.coords[i] == doctest::Approx(canon.coords[i]));
  const RawPoseTrack back = denormalize(n.track, n.transform);
  for (std::size_t i = 0; i < raw.coords.size(); ++i) CHECK(std::fabs(back.coords[i] - raw.coords[i]) < 1e-9);

  RawPoseTrack flat = canon;
  for (std::size_t i = 0; i < flat.coords.size(); ++i) flat.coords[i] = 0.0;
  CHECK_THROWS_AS(normalize(flat, view, opts), Error);
}

TEST_CASE("full preprocessing chain") {
  RawPoseTrack t = canonical_track(30);
  shift_from(t, 12, 0.8);
  t.confidence[5 * 3 + 2] = 0.1;
  const CameraView view;
  PreprocessOptions opts;
  opts.normalize.distance = 1.0;
  const auto segs = preprocess(t, view, opts);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].track.frames() == 12);
  CHECK(segs[1].track.frames() == 18);
  CHECK(segs[1].track.frame_index.front() == 12);
  CHECK(segs[0].track.mask.empty());  // the masked sample is filled by smoothing
  CHECK(segs[0].transform.scale == doctest::Approx(segs[1].transform.scale));
}
