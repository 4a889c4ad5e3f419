#include <doctest.h>

#include <Eigen/Geometry>

#include "cmas/error.hpp"
#include "cmas/eval.hpp"
#include "test_util.hpp"

using namespace cmas;

TEST_CASE("mpjpe arithmetic") {
  RngStream rng(61);
  const Pose3DSequence gt = cmas::testing::random_pose(4, 13, rng);
  for (auto a : {Alignment::none, Alignment::root, Alignment::procrustes}) CHECK(mpjpe(gt, gt, a) == doctest::Approx(0.0));

  Pose3DSequence off = gt;
  for (int l = 0; l < 4; ++l) {
    for (int j = 0; j < 13; ++j) off.at(l, j) += Eigen::Vector3d(0.003, 0.004, 0.0);
  }
  CHECK(mpjpe(off, gt, Alignment::none) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(mpjpe(off, gt, Alignment::root) == doctest::Approx(0.0));

  const Pose3DSequence other = cmas::testing::random_pose(4, 13, rng);
  CHECK(mpjpe(other, gt, Alignment::none) == mpjpe(gt, other, Alignment::none));

  // per-frame offsets vanish under root alignment
  Pose3DSequence drift = other;
  for (int l = 0; l < 4; ++l) {
    for (int j = 0; j < 13; ++j) drift.at(l, j) += Eigen::Vector3d(0.1 * l, -0.3 * l, 0.02);
  }
  CHECK(mpjpe(drift, gt, Alignment::root) == doctest::Approx(mpjpe(other, gt, Alignment::root)));

  // a similarity transform vanishes under procrustes
  Pose3DSequence sim = gt;
  const Eigen::Matrix3d R = Eigen::AngleAxisd(1.1, Eigen::Vector3d(0.2, 1, -0.4).normalized()).toRotationMatrix();
  for (int l = 0; l < 4; ++l) {
    for (int j = 0; j < 13; ++j) sim.at(l, j) = 1.7 * R * gt.at(l, j) + Eigen::Vector3d(1, 2, 3);
  }
  CHECK(mpjpe(sim, gt, Alignment::procrustes) < 1e-9);

  CHECK_THROWS_AS(mpjpe(gt, Pose3DSequence(3, 13), Alignment::none), Error);
  CHECK(parse_alignment("procrustes") == Alignment::procrustes);
  CHECK(std::string(alignment_name(Alignment::root)) == "root");
  CHECK_THROWS_AS(parse_alignment("rigid"), Error);
}

TEST_CASE("synthetic motion is rigid and reproducible") {
  const auto& topo = default_topology();
  RngStream a(62), b(62);
  const Pose3DSequence m = synth_motion(topo, 32, a);
  CHECK(m.coords == synth_motion(topo, 32, b).coords);
  CHECK(bone_variance_loss(m, topo) < 1e-12);
  CHECK(m.all_finite());

  MotionParams still;
  still.amplitude = 0.0;
  still.root_sway = 0.0;
  RngStream c(63);
  const Pose3DSequence s = synth_motion(topo, 5, c, still);
  for (int l = 1; l < 5; ++l) {
    for (int j = 0; j < 13; ++j) CHECK((s.at(l, j) - s.at(0, j)).norm() < 1e-12);
  }
  CHECK_THROWS_AS(synth_motion(topo, 0, c), Error);
}

TEST_CASE("datasets") {
  const CameraRig rig = make_rig(3);
  RngStream a(64), b(64);
  const SyntheticDataset d = make_dataset(1, default_topology(), rig, 8, a);
  CHECK(d.motions.size() == 1);
  REQUIRE(d.projections.size() == 3);
  for (const auto& v : d.projections) CHECK(v.size() == 1);
  const SyntheticDataset e = make_dataset(1, default_topology(), rig, 8, b);
  CHECK(d.motions[0].coords == e.motions[0].coords);
  CHECK(d.projections[2][0].coords == project(d.motions[0], rig.views[2]).coords);
  CHECK_THROWS_AS(make_dataset(0, default_topology(), rig, 8, a), Error);
}

TEST_CASE("constant-depth baseline") {
  const CameraRig rig = make_rig(7);
  RngStream rng(65);
  const Pose3DSequence m = synth_motion(default_topology(), 6, rng);
  const Pose2DSequence in = project(m, rig.reference());
  const Pose3DSequence X = baseline_lift(in, rig.reference(), 7.0);
  CHECK(cmas::testing::max_abs_diff(project(X, rig.reference()).coords, in.coords) < 1e-9);

  Pose2DSequence flat(2, 3);
  const Pose3DSequence axis = baseline_lift(flat, rig.reference(), 7.0);
  for (int l = 0; l < 2; ++l) {
    for (int j = 0; j < 3; ++j) CHECK(axis.at(l, j).norm() < 1e-12);  // the subject center
  }
}
