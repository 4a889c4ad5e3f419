#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "cmas/error.hpp"
#include "cmas/io.hpp"
#include "test_util.hpp"

using namespace cmas;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cmas_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("pose files round trip exactly") {
  const fs::path dir = scratch_dir("pose");
  RngStream rng(71);
  Pose2DSequence s(3, 4);
  for (double& c : s.coords) c = rng.normal();
  s.mask.assign(12, 1);
  s.mask[5] = 0;
  const std::string p2 = (dir / "a.jsonl").string();
  write_pose2d_jsonl(p2, s, {10, 11, 12});
  std::vector<int> idx;
  const Pose2DSequence back = read_pose2d_jsonl(p2, &idx);
  CHECK(back.coords == s.coords);
  CHECK(back.mask == s.mask);
  CHECK(idx == std::vector<int>{10, 11, 12});

  const Pose3DSequence X = cmas::testing::random_pose(2, 5, rng);
  const std::string p3 = (dir / "b.jsonl").string();
  write_pose3d_jsonl(p3, X);
  CHECK(read_pose3d_jsonl(p3).coords == X.coords);
  fs::remove_all(dir);
}

TEST_CASE("pose file line format") {
  Pose2DSequence s(1, 2);
  s.coords = {0.5, -1.0, 2.0, 0.25};
  s.mask = {1, 0};
  CHECK(pose2d_to_jsonl(s) == "{\"f\":0,\"mask\":[true,false],\"xy\":[[0.5,-1.0],[2.0,0.25]]}\n");
  StepDiagnostics d;
  d.step = 3;
  d.loss = 0.5;
  d.ref_err = 0.25;
  d.bone_var = 0.0;
  CHECK(diagnostics_to_jsonl({d}) == "{\"bone_var\":0.0,\"loss\":0.5,\"ref_err\":0.25,\"t\":3}\n");
}

TEST_CASE("malformed pose files are configuration errors") {
  const fs::path dir = scratch_dir("bad");
  const std::string p = (dir / "bad.jsonl").string();
  write_text(p, "{\"f\":0,\"xy\":[[0,0],[1,1]]}\n{\"f\":1,\"xy\":[[0,0]]}\n");
  CHECK_THROWS_AS(read_pose2d_jsonl(p), Error);
  write_text(p, "not json\n");
  try {
    read_pose2d_jsonl(p);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config);
  }
  try {
    read_pose2d_jsonl((dir / "missing.jsonl").string());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::io);
  }
  fs::remove_all(dir);
}

TEST_CASE("pose estimator output with the COCO-17 map") {
  std::vector<double> kp(51, 0.0);
  for (int k = 0; k < 17; ++k) {
    kp[3 * k] = k;
    kp[3 * k + 1] = 2.0 * k;
    kp[3 * k + 2] = 0.9;
  }
  kp[3 * 12 + 2] = 0.2;  // right hip
  nlohmann::json doc = nlohmann::json::array();
  doc.push_back({{"keypoints", kp}});
  doc.push_back({{"keypoints", kp}, {"frame", 7}});
  const RawPoseTrack t = parse_alphapose(doc.dump(), coco17_joint_map());
  CHECK(t.joints == 13);
  CHECK(t.frames() == 2);
  CHECK(t.frame_index == std::vector<int>{0, 7});
  CHECK(t.point(0, 0).x() == doctest::Approx(11.5));  // hip midpoint
  CHECK(t.confidence[0] == doctest::Approx(0.2));     // weakest source
  CHECK(t.point(0, 1).y() == doctest::Approx(11.0));  // shoulder midpoint
  CHECK(t.point(0, 2).x() == doctest::Approx(0.0));   // nose

  kp.pop_back();
  nlohmann::json short_doc = nlohmann::json::array();
  short_doc.push_back({{"keypoints", kp}});
  CHECK_THROWS_AS(parse_alphapose(short_doc.dump(), coco17_joint_map()), Error);
}

TEST_CASE("custom joint maps") {
  const fs::path dir = scratch_dir("map");
  const std::string p = (dir / "map.json").string();
  write_text(p, "{\"source_joints\": 3, \"map\": [[0, 1], 2]}");
  const JointMap m = load_joint_map(p);
  CHECK(m.joints() == 2);
  CHECK(m.sources[0] == std::vector<int>{0, 1});
  write_text(p, "{\"source_joints\": 3, \"map\": [5]}");
  CHECK_THROWS_AS(load_joint_map(p), Error);
  fs::remove_all(dir);
}

TEST_CASE("dataset directories") {
  const fs::path dir = scratch_dir("ds");
  const CameraRig rig = make_rig(3);
  RngStream rng(72);
  const SyntheticDataset d = make_dataset(2, default_topology(), rig, 4, rng);
  write_dataset(dir.string(), d);
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 2 * (1 + 3));
  const SyntheticDataset back = read_dataset(dir.string());
  REQUIRE(back.motions.size() == 2);
  REQUIRE(back.projections.size() == 3);
  CHECK(back.motions[1].coords == d.motions[1].coords);
  CHECK(back.projections[2][1].coords == d.projections[2][1].coords);
  fs::remove(dir / "motion_0001_view2.jsonl");
  CHECK_THROWS_AS(read_dataset(dir.string()), Error);
  fs::remove_all(dir);
  try {
    read_dataset(dir.string());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config);
  }
}
