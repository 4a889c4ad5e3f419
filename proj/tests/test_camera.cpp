#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cmas/camera.hpp"
#include "cmas/error.hpp"
#include "test_util.hpp"

using namespace cmas;
using cmas::testing::numeric_gradient;
using cmas::testing::random_pose;
using cmas::testing::rel_error;

TEST_CASE("ring rig geometry") {
  const CameraRig rig = make_rig(7);
  REQUIRE(rig.size() == 7);
  for (int k = 0; k < 7; ++k) {
    const CameraView& v = rig.views[static_cast<std::size_t>(k)];
    CHECK_NOTHROW(v.validate());
    const Eigen::Vector3d c = v.center();
    CHECK(c.norm() == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(std::asin(c.y() / c.norm()) == doctest::Approx(std::numbers::pi / 16));
    const double az = std::atan2(c.x(), c.z());
    double expected = 2.0 * std::numbers::pi * k / 7;
    if (expected > std::numbers::pi) expected -= 2.0 * std::numbers::pi;
    CHECK(az == doctest::Approx(expected).epsilon(1e-12));
    const Eigen::Vector2d pp = project_point(Eigen::Vector3d::Zero(), v);
    CHECK(pp.norm() < 1e-12);
  }
  const CameraRig one = make_rig(1);
  CHECK(one.views[0].center().x() == doctest::Approx(0.0));
  CHECK(one.views[0].center().z() > 0.0);
  CHECK_THROWS_AS(make_rig(0), Error);
  CHECK_THROWS_AS(make_rig(3, {}, 3), Error);

  RigParams shifted;
  shifted.subject_center = Eigen::Vector3d(1, 0.5, -2);
  for (const auto& v : make_rig(5, shifted).views) {
    CHECK(project_point(shifted.subject_center, v).norm() < 1e-12);
  }
}

TEST_CASE("rig json round trip") {
  const CameraRig rig = make_rig(4, {}, 2);
  const CameraRig back = CameraRig::from_json(rig.to_json());
  CHECK(back.reference_index == 2);
  for (int k = 0; k < 4; ++k) {
    CHECK((back.views[k].rotation - rig.views[k].rotation).norm() < 1e-15);
    CHECK((back.views[k].translation - rig.views[k].translation).norm() < 1e-15);
    CHECK(back.views[k].focal == rig.views[k].focal);
  }
  nlohmann::json bad = rig.to_json();
  bad["views"][0]["R"][0] = 2.0;
  CHECK_THROWS_AS(CameraRig::from_json(bad), Error);
}

TEST_CASE("pinhole arithmetic") {
  CameraView v;
  v.focal = 3.0;
  v.principal_point = Eigen::Vector2d(0.1, -0.2);
  // lateral offset d at depth z maps to focal * d / z
  const Eigen::Vector2d p = project_point(Eigen::Vector3d(0.5, 0.0, 2.0), v);
  CHECK(p.x() - 0.1 == doctest::Approx(3.0 * 0.5 / 2.0));
  CHECK(p.y() == doctest::Approx(-0.2));
  // along the viewing ray
  const Eigen::Vector2d q = project_point(Eigen::Vector3d(1.25, -0.5, 5.0), v);
  const Eigen::Vector2d r = project_point(Eigen::Vector3d(2.5, -1.0, 10.0), v);
  CHECK((q - r).norm() < 1e-14);
  CHECK_THROWS_AS(project_point(Eigen::Vector3d(0, 0, -1), v), Error);
}

TEST_CASE("projection error names frame and joint") {
  CameraView v;
  Pose3DSequence s(2, 3);
  for (double& c : s.coords) c = 1.0;
  s.at(1, 2) = Eigen::Vector3d(0, 0, -1);
  try {
    project(s, v);
    FAIL("expected a projection error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::projection);
    const std::string msg = e.what();
    CHECK(msg.find("frame 1") != std::string::npos);
    CHECK(msg.find("joint 2") != std::string::npos);
  }
}

TEST_CASE("projection gradient matches central differences") {
  const CameraRig rig = make_rig(5);
  RngStream rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose3DSequence X = random_pose(3, 5, rng);
    const CameraView& view = rig.views[static_cast<std::size_t>(trial % 5)];
    std::vector<double> r(3 * 5 * 2);
    for (double& x : r) x = rng.normal();
    auto f = [&](const std::vector<double>& c) {
      Pose3DSequence Y = X;
      Y.coords = c;
      const auto p = project(Y, view);
      double dot = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) dot += p.coords[i] * r[i];
      return dot;
    };
    CHECK(rel_error(project_gradient(X, view, r), numeric_gradient(f, X.coords)) < 1e-4);
  }
  const Pose3DSequence X = random_pose(2, 4, rng);
  for (double g : project_gradient(X, rig.views[0], std::vector<double>(16, 0.0))) CHECK(g == 0.0);
}

TEST_CASE("image-x residual gives no gradient along the camera y axis") {
  const CameraRig rig = make_rig(3);
  const CameraView& view = rig.views[1];
  RngStream rng(12);
  const Pose3DSequence X = random_pose(1, 4, rng);
  std::vector<double> r(8, 0.0);
  for (int j = 0; j < 4; ++j) r[2 * static_cast<std::size_t>(j)] = rng.normal();
  const auto g = project_gradient(X, view, r);
  const Eigen::Vector3d down = view.rotation.row(1).transpose();
  for (int j = 0; j < 4; ++j) {
    const Eigen::Vector3d gj(g[3 * j], g[3 * j + 1], g[3 * j + 2]);
    CHECK(std::fabs(gj.dot(down)) < 1e-12);
  }
}

TEST_CASE("noise projection moments") {
  const CameraRig rig = make_rig(7);
  RngStream rng(13);
  const std::size_t n = 100000;
  const auto eps = rng.normal_vector(3 * n);
  for (int k : {0, 3}) {
    const auto out = project_noise(eps, rig.views[static_cast<std::size_t>(k)]);
    REQUIRE(out.size() == 2 * n);
    for (int c = 0; c < 2; ++c) {
      double m = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += out[2 * i + c];
      m /= n;
      for (std::size_t i = 0; i < n; ++i) m2 += (out[2 * i + c] - m) * (out[2 * i + c] - m);
      m2 /= n;
      CHECK(std::fabs(m) < 0.02);
      CHECK(m2 > 0.96);
      CHECK(m2 < 1.04);
    }
  }
  CameraView id;
  const std::vector<double> e{1, 2, 3, 4, 5, 6};
  CHECK(project_noise(e, id) == std::vector<double>{1, 2, 4, 5});
  for (double v : project_noise(std::vector<double>(6, 0.0), rig.views[2])) CHECK(v == 0.0);
}

TEST_CASE("backprojection inverts projection") {
  const CameraRig rig = make_rig(4);
  RngStream rng(14);
  Pose2DSequence s(3, 5);
  for (double& c : s.coords) c = rng.uniform(-1, 1);
  const Pose3DSequence X = backproject(s, rig.views[1], 6.5);
  const Pose2DSequence back = project(X, rig.views[1]);
  CHECK(cmas::testing::max_abs_diff(back.coords, s.coords) < 1e-9);
  for (int l = 0; l < 3; ++l) {
    for (int j = 0; j < 5; ++j) CHECK(rig.views[1].to_camera(X.at(l, j)).z() == doctest::Approx(6.5));
  }
}
