#include <doctest.h>

#include <Eigen/Geometry>

#include "cmas/error.hpp"
#include "cmas/skeleton.hpp"
#include "test_util.hpp"

using namespace cmas;
using cmas::testing::numeric_gradient;
using cmas::testing::random_pose;
using cmas::testing::rel_error;

namespace {

SkeletonTopology two_joint() { return SkeletonTopology(2, {{0, 1}}, 0); }

}  // namespace

TEST_CASE("topology rejects malformed bone lists") {
  CHECK_THROWS_AS(SkeletonTopology(3, {{0, 1}, {1, 3}}, 0), Error);
  CHECK_THROWS_AS(SkeletonTopology(3, {{0, 1}, {1, 1}}, 0), Error);
  CHECK_THROWS_AS(SkeletonTopology(3, {{0, 1}, {0, 1}}, 0), Error);
  CHECK_THROWS_AS(SkeletonTopology(4, {{0, 1}, {2, 3}}, 0), Error);          // too few bones
  CHECK_THROWS_AS(SkeletonTopology(4, {{0, 1}, {1, 0}, {2, 3}}, 0), Error);  // disconnected
  CHECK_THROWS_AS(SkeletonTopology(2, {{0, 1}}, 2), Error);
  CHECK_NOTHROW(SkeletonTopology(1, {}, 0));
}

TEST_CASE("default topology") {
  const auto& t = default_topology();
  CHECK(t.joint_count() == 13);
  CHECK(t.bone_count() == 12);
  CHECK(t.root() == 0);
  CHECK(t.find("neck") == 1);
  CHECK(t.find("tail") == -1);
  const auto back = SkeletonTopology::from_json(t.to_json());
  CHECK(back.joint_count() == 13);
  CHECK(back.names() == t.names());
  REQUIRE(back.bones().size() == t.bones().size());
  for (std::size_t i = 0; i < t.bones().size(); ++i) {
    CHECK(back.bones()[i].parent == t.bones()[i].parent);
    CHECK(back.bones()[i].child == t.bones()[i].child);
  }
}

TEST_CASE("bone lengths") {
  Pose3DSequence s(1, 2);
  s.at(0, 1) = Eigen::Vector3d(0, 3, 4);
  const auto b = bone_lengths(s, 0, two_joint());
  REQUIRE(b.size() == 1);
  CHECK(b[0] == doctest::Approx(5.0).epsilon(1e-15));

  RngStream rng(3);
  Pose3DSequence p = random_pose(1, 13, rng);
  const auto before = bone_lengths(p, 0, default_topology());
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  for (int j = 0; j < 13; ++j) p.at(0, j) = R * p.at(0, j) + Eigen::Vector3d(1, -2, 0.5);
  const auto after = bone_lengths(p, 0, default_topology());
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(after[i] == doctest::Approx(before[i]).epsilon(1e-12));

  Pose3DSequence zero(1, 13);
  for (double v : bone_lengths(zero, 0, default_topology())) CHECK(v == 0.0);
}

TEST_CASE("bone variance loss") {
  Pose3DSequence s(2, 2);
  s.at(0, 1) = Eigen::Vector3d(1, 0, 0);
  s.at(1, 1) = Eigen::Vector3d(0, 3, 0);
  CHECK(bone_variance_loss(s, two_joint()) == doctest::Approx(1.0).epsilon(1e-15));

  RngStream rng(4);
  Pose3DSequence single = random_pose(1, 13, rng);
  CHECK(bone_variance_loss(single, default_topology()) == 0.0);

  // Same pose translated per frame.
  Pose3DSequence rigid(5, 13);
  for (int l = 0; l < 5; ++l) {
    for (int j = 0; j < 13; ++j) rigid.at(l, j) = single.at(0, j) + Eigen::Vector3d(0.1 * l, -0.2 * l, 0.05 * l);
  }
  CHECK(bone_variance_loss(rigid, default_topology()) == doctest::Approx(0.0).epsilon(1e-24));
  for (double g : bone_variance_gradient(rigid, default_topology())) CHECK(std::fabs(g) < 1e-12);
}

TEST_CASE("bone variance gradient matches central differences") {
  const auto& topo = default_topology();
  RngStream rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Pose3DSequence X = random_pose(4, 13, rng);
    auto f = [&](const std::vector<double>& c) {
      Pose3DSequence Y = X;
      Y.coords = c;
      return bone_variance_loss(Y, topo);
    };
    CHECK(rel_error(bone_variance_gradient(X, topo), numeric_gradient(f, X.coords)) < 1e-4);
  }
}

TEST_CASE("bone variance gradient is translation invariant") {
  RngStream rng(6);
  Pose3DSequence X = random_pose(3, 13, rng);
  const auto g0 = bone_variance_gradient(X, default_topology());
  for (int l = 0; l < 3; ++l) {
    for (int j = 0; j < 13; ++j) X.at(l, j) += Eigen::Vector3d(2.0, -1.0, 3.0);
  }
  CHECK(cmas::testing::max_abs_diff(bone_variance_gradient(X, default_topology()), g0) < 1e-10);
}

TEST_CASE("accumulate adds a scaled gradient") {
  RngStream rng(7);
  const Pose3DSequence X = random_pose(3, 13, rng);
  std::vector<double> grad(X.size(), 1.0);
  const double v = accumulate_bone_variance(X, default_topology(), 0.5, grad);
  CHECK(v == doctest::Approx(0.5 * bone_variance_loss(X, default_topology())));
  const auto g = bone_variance_gradient(X, default_topology());
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(grad[i] == doctest::Approx(1.0 + 0.5 * g[i]));
}
