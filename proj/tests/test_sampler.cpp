#include <doctest.h>

#include <cmath>

#include "cmas/error.hpp"
#include "cmas/eval.hpp"
#include "cmas/prior.hpp"
#include "cmas/sampler.hpp"
#include "test_util.hpp"

using namespace cmas;

namespace {

CmasConfig fast_config() {
  CmasConfig c;
  c.steps = 10;
  c.optimizer.iterations = 100;
  c.seed = 3;
  return c;
}

std::shared_ptr<const GaussianMotionPrior> small_prior(const CameraRig& rig, int L) {
  RngStream rng(51);
  const auto ds = make_dataset(40, default_topology(), rig, L, rng);
  std::vector<Pose2DSequence> pool;
  for (const auto& v : ds.projections) pool.insert(pool.end(), v.begin(), v.end());
  return std::make_shared<const GaussianMotionPrior>(fit_gaussian_prior(pool));
}

}  // namespace

TEST_CASE("config validation") {
  CmasConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.views == 7);
  CHECK(c.steps == 100);
  CHECK(c.w_ref == 0.8);
  CHECK(c.lambda_bone == 0.001);
  CHECK(c.optimizer.learning_rate == 0.01);
  CHECK(c.optimizer.iterations == 1000);
  c.w_ref = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.views = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.steps = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.lambda_bone = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("initial noise") {
  CmasConfig c;
  c.seed = 9;
  CameraRig rig = make_rig(3);
  RngStream a = init_noise_stream(c), b = init_noise_stream(c);
  const auto la = init_noise(c, 4, 13, rig, a);
  const auto lb = init_noise(c, 4, 13, rig, b);
  CHECK(la.step == 100);
  CHECK(la.latents == lb.latents);

  // identical rotations give identical latents
  rig.views[2] = rig.views[0];
  RngStream r = init_noise_stream(c);
  const auto same = init_noise(c, 2, 3, rig, r);
  CHECK(same.latents[0] == same.latents[2]);

  const CameraRig seven = make_rig(7);
  RngStream big = init_noise_stream(c);
  const auto lat = init_noise(c, 400, 25, seven, big);  // 10^4 joints
  for (const auto& x : lat.latents) {
    double m = 0.0, v = 0.0;
    for (double e : x) m += e;
    m /= x.size();
    for (double e : x) v += (e - m) * (e - m);
    v /= x.size();
    CHECK(std::fabs(m) < 0.03);
    CHECK(v > 0.94);
    CHECK(v < 1.06);
  }
}

TEST_CASE("oracle lift returns the ground truth") {
  CmasConfig c = fast_config();
  c.optimizer.iterations = 1000;
  const CameraRig rig = rig_for(c);
  RngStream rng(52);
  const Pose3DSequence truth = synth_motion(default_topology(), 8, rng);
  const OracleDenoiser oracle(truth, rig);
  const LiftResult r = lift(project(truth, rig.reference()), oracle, c);
  CHECK(cmas::testing::max_joint_error(r.pose, truth) < 1e-3);
  CHECK(r.diagnostics.size() == 11);
  CHECK(r.diagnostics.front().step == 10);
  CHECK(r.diagnostics.back().step == 0);
}

TEST_CASE("single view lift keeps the reference projection") {
  CmasConfig c = fast_config();
  c.views = 1;
  c.w_ref = 1.0;
  c.optimizer.iterations = 1000;
  const CameraRig rig = rig_for(c);
  RngStream rng(53);
  const Pose3DSequence truth = synth_motion(default_topology(), 8, rng);
  const auto prior = small_prior(make_rig(7), 8);
  const GaussianDenoiser den(prior, cosine_schedule(c.steps));
  const Pose2DSequence input = project(truth, rig.reference());
  const LiftResult r = lift(input, den, c);
  const Pose2DSequence back = project(r.pose, rig.reference());
  double worst = 0.0;
  for (int l = 0; l < 8; ++l) {
    for (int j = 0; j < 13; ++j) worst = std::max(worst, (back.at(l, j) - input.at(l, j)).norm());
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("lift is deterministic across runs and thread counts") {
  CmasConfig c = fast_config();
  const CameraRig rig = rig_for(c);
  RngStream rng(54);
  const Pose3DSequence truth = synth_motion(default_topology(), 8, rng);
  const auto prior = small_prior(rig, 8);
  const GaussianDenoiser den(prior, cosine_schedule(c.steps));
  const Pose2DSequence input = project(truth, rig.reference());
  const LiftResult a = lift(input, den, c);
  c.threads = 4;
  const LiftResult b = lift(input, den, c);
  CHECK(a.pose.coords == b.pose.coords);
  c.seed = 4;
  const LiftResult d = lift(input, den, c);
  CHECK(a.pose.coords != d.pose.coords);
}

TEST_CASE("lift rejects inputs the denoiser cannot handle") {
  CmasConfig c = fast_config();
  const CameraRig rig = rig_for(c);
  RngStream rng(55);
  const Pose3DSequence truth = synth_motion(default_topology(), 8, rng);
  const OracleDenoiser oracle(truth, rig);
  const Pose2DSequence wrong = project(synth_motion(default_topology(), 6, rng), rig.reference());
  try {
    lift(wrong, oracle, c);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config);
  }
  CHECK(reprojection_error(truth, project(truth, rig.views[2]), rig.views[2]) < 1e-12);
}
