#include <doctest.h>

#include <cmath>

#include "cmas/error.hpp"
#include "cmas/eval.hpp"
#include "cmas/triangulate.hpp"
#include "test_util.hpp"

using namespace cmas;
using cmas::testing::max_joint_error;
using cmas::testing::numeric_gradient;
using cmas::testing::random_pose;
using cmas::testing::rel_error;

namespace {

std::vector<Pose2DSequence> projections(const Pose3DSequence& X, const CameraRig& rig) {
  std::vector<Pose2DSequence> out;
  for (const auto& v : rig.views) out.push_back(project(X, v));
  return out;
}

SkeletonTopology chain(int J) {
  std::vector<Bone> b;
  for (int j = 1; j < J; ++j) b.push_back({j - 1, j});
  return SkeletonTopology(J, b, 0);
}

}  // namespace

TEST_CASE("view weights") {
  const ViewWeights w = view_weights(7, 4.0 / 5.0, 0);
  REQUIRE(w.values.size() == 7);
  CHECK(w.values[0] == 0.8);
  for (int v = 1; v < 7; ++v) CHECK(w.values[v] == doctest::Approx(1.0 / 30.0).epsilon(1e-15));
  double sum = 0.0;
  for (double a : w.values) sum += a;
  CHECK(std::fabs(sum - 1.0) < 1e-12);
  for (double a : view_weights(7, 1.0 / 7.0, 3).values) CHECK(a == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  const ViewWeights two = view_weights(2, 0.5, 1);
  CHECK(two.values[0] == 0.5);
  CHECK(two.values[1] == 0.5);
  CHECK(view_weights(1, 1.0, 0).values == std::vector<double>{1.0});
  CHECK_THROWS_AS(view_weights(7, 0.0, 0), Error);
  CHECK_THROWS_AS(view_weights(7, 1.2, 0), Error);
  CHECK_THROWS_AS(view_weights(7, 0.8, 7), Error);
  CHECK_THROWS_AS(view_weights(1, 0.5, 0), Error);
}

TEST_CASE("geometry loss arithmetic") {
  const CameraRig rig = make_rig(3);
  const ViewWeights w = view_weights(3, 0.5, 0);
  RngStream rng(41);
  const Pose3DSequence X = random_pose(2, 4, rng);
  auto targets = projections(X, rig);
  CHECK(geometry_loss(X, targets, rig, w) < 1e-25);
  targets[1].coords[5] += 0.03;
  CHECK(geometry_loss(X, targets, rig, w) == doctest::Approx(0.25 * 0.03 * 0.03).epsilon(1e-9));
  targets[1].coords[5] += 0.03;
  CHECK(geometry_loss(X, targets, rig, w) == doctest::Approx(0.25 * 0.06 * 0.06).epsilon(1e-9));
  // a masked joint does not count
  targets[1].mask.assign(8, 1);
  targets[1].mask[2] = 0;  // coordinate 5 belongs to joint 2 of frame 0
  CHECK(geometry_loss(X, targets, rig, w) == doctest::Approx(0.0).epsilon(1e-20));
  targets.pop_back();
  CHECK_THROWS_AS(geometry_loss(X, targets, rig, w), Error);
}

TEST_CASE("total loss") {
  const CameraRig rig = make_rig(3);
  const ViewWeights w = view_weights(3, 0.8, 0);
  RngStream rng(42);
  const auto& topo = default_topology();
  const Pose3DSequence X = random_pose(3, 13, rng);
  auto targets = projections(random_pose(3, 13, rng), rig);
  CHECK(total_loss(X, targets, rig, w, 0.0, topo) == geometry_loss(X, targets, rig, w));
  Pose3DSequence rigid(3, 13);
  for (int l = 0; l < 3; ++l) {
    for (int j = 0; j < 13; ++j) rigid.at(l, j) = X.at(0, j) + Eigen::Vector3d(0.01 * l, 0, 0);
  }
  CHECK(total_loss(rigid, targets, rig, w, 0.5, topo) ==
        doctest::Approx(geometry_loss(rigid, targets, rig, w)).epsilon(1e-12));

  // bone lengths 1 and 3 over two frames: variance 1
  const SkeletonTopology two(2, {{0, 1}}, 0);
  Pose3DSequence Y(2, 2);
  Y.at(0, 1) = Eigen::Vector3d(1, 0, 0);
  Y.at(1, 1) = Eigen::Vector3d(0, 3, 0);
  CHECK(total_loss(Y, projections(Y, rig), rig, w, 0.001, two) == doctest::Approx(0.001).epsilon(1e-12));
}

TEST_CASE("loss gradients match central differences") {
  RngStream rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const int V = 1 + trial % 5;
    const int J = 2 + trial % 4;
    const CameraRig rig = make_rig(V);
    const ViewWeights w = view_weights(V, V == 1 ? 1.0 : 0.6, 0);
    const SkeletonTopology topo = chain(J);
    const Pose3DSequence X = random_pose(3, J, rng);
    auto targets = projections(random_pose(3, J, rng, 0.3), rig);
    const double lambda = trial % 2 ? 0.0 : rng.uniform(0.01, 2.0);
    auto f = [&](const std::vector<double>& c) {
      Pose3DSequence Z = X;
      Z.coords = c;
      return total_loss(Z, targets, rig, w, lambda, topo);
    };
    CHECK(rel_error(total_loss_gradient(X, targets, rig, w, lambda, topo), numeric_gradient(f, X.coords)) < 1e-4);
  }
}

TEST_CASE("triangulation recovers noiseless motion") {
  const CameraRig rig = make_rig(7);
  const ViewWeights w = view_weights(7, 0.8, 0);
  RngStream rng(44);
  for (int n = 0; n < 3; ++n) {
    const Pose3DSequence truth = synth_motion(default_topology(), 16, rng);
    Pose3DSequence init = truth;
    for (double& c : init.coords) c += 0.01 * rng.normal();
    const auto r = triangulate(projections(truth, rig), rig, w, 0.001, default_topology(), init);
    CHECK(max_joint_error(r.pose, truth) < 1e-3);
    CHECK(r.final_loss <= r.initial_loss);
  }
}

TEST_CASE("full reference weight follows the reference view only") {
  const CameraRig rig = make_rig(4);
  const ViewWeights w = view_weights(4, 1.0, 0);
  RngStream rng(45);
  const Pose3DSequence truth = synth_motion(default_topology(), 8, rng);
  auto targets = projections(truth, rig);
  for (int v = 1; v < 4; ++v) {
    for (double& c : targets[static_cast<std::size_t>(v)].coords) c += rng.uniform(-0.5, 0.5);
  }
  Pose3DSequence init = truth;
  for (double& c : init.coords) c += 0.05 * rng.normal();
  const auto r = triangulate(targets, rig, w, 0.0, default_topology(), init);
  const Pose2DSequence back = project(r.pose, rig.views[0]);
  double worst = 0.0;
  for (int l = 0; l < 8; ++l) {
    for (int j = 0; j < 13; ++j) worst = std::max(worst, (back.at(l, j) - targets[0].at(l, j)).norm());
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("loss is invariant under cyclic view relabeling") {
  const CameraRig rig = make_rig(7);
  const ViewWeights w = view_weights(7, 1.0 / 7.0, 0);
  RngStream rng(46);
  const Pose3DSequence X = random_pose(2, 13, rng);
  const auto targets = projections(random_pose(2, 13, rng), rig);
  CameraRig shifted = rig;
  std::vector<Pose2DSequence> shifted_targets = targets;
  for (int v = 0; v < 7; ++v) {
    shifted.views[static_cast<std::size_t>(v)] = rig.views[static_cast<std::size_t>((v + 3) % 7)];
    shifted_targets[static_cast<std::size_t>(v)] = targets[static_cast<std::size_t>((v + 3) % 7)];
  }
  CHECK(geometry_loss(X, shifted_targets, shifted, w) ==
        doctest::Approx(geometry_loss(X, targets, rig, w)).epsilon(1e-12));
}

TEST_CASE("optimizer settings are validated") {
  OptimizerSettings s;
  CHECK_NOTHROW(s.validate());
  s.learning_rate = 0.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.iterations = 0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.beta2 = 1.0;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("iterates are kept in front of every camera") {
  const CameraRig rig = make_rig(2);
  const ViewWeights w = view_weights(2, 0.5, 0);
  // target far off to the side pulls joints toward the camera plane
  Pose3DSequence X(1, 2);
  X.at(0, 1) = Eigen::Vector3d(0.2, 0, 0);
  auto targets = projections(X, rig);
  for (double& c : targets[0].coords) c += 40.0;
  OptimizerSettings s;
  s.learning_rate = 0.5;
  s.iterations = 300;
  const auto r = triangulate(targets, rig, w, 0.0, SkeletonTopology(2, {{0, 1}}, 0), X, s);
  for (const auto& v : rig.views) {
    for (int j = 0; j < 2; ++j) CHECK(v.to_camera(r.pose.at(0, j)).z() >= 0.1 - 1e-12);
  }
  CHECK(r.pose.all_finite());
}
