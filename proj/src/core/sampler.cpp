#include "cmas/sampler.hpp"

#include <cmath>
#include <string>

#include "cmas/error.hpp"
#include "cmas/parallel.hpp"

namespace cmas {

void CmasConfig::validate() const {
  if (views < 1) fail(Errc::config, "config: views must be >= 1");
  if (steps < 1) fail(Errc::config, "config: steps must be >= 1");
  if (!(w_ref > 0.0 && w_ref <= 1.0)) fail(Errc::config, "config: w_ref must lie in (0, 1]");
  if (views == 1 && w_ref != 1.0) fail(Errc::config, "config: a single view needs w_ref = 1");
  if (!(lambda_bone >= 0.0)) fail(Errc::config, "config: lambda_bone must be >= 0");
  if (reference_index < 0 || reference_index >= views) {
    fail(Errc::config, "config: reference index out of range");
  }
  if (!(rig.distance > 0.0)) fail(Errc::config, "config: rig distance must be positive");
  optimizer.validate();
}

CameraRig rig_for(const CmasConfig& config) {
  return make_rig(config.views, config.rig, config.reference_index);
}

RngStream init_noise_stream(const CmasConfig& config) {
  return rng_stream(config.seed, static_cast<std::uint64_t>(config.steps) + 1, 0);
}

ViewLatents init_noise(const CmasConfig& config, int frames, int joints, const CameraRig& rig,
                       RngStream& rng) {
  if (frames < 1 || joints < 1) fail(Errc::domain, "init_noise: empty sequence shape");
  const std::vector<double> eps3d =
      rng.normal_vector(static_cast<std::size_t>(frames) * joints * 3);
  ViewLatents out;
  out.step = config.steps;
  out.latents.reserve(rig.views.size());
  for (const auto& view : rig.views) out.latents.push_back(project_noise(eps3d, view));
  return out;
}

double reprojection_error(const Pose3DSequence& X, const Pose2DSequence& observed,
                          const CameraView& view) {
  const Pose2DSequence proj = project(X, view);
  double sum = 0.0;
  int count = 0;
  for (int l = 0; l < observed.frames; ++l) {
    for (int j = 0; j < observed.joints; ++j) {
      if (!observed.observed(l, j)) continue;
      sum += (proj.at(l, j) - observed.at(l, j)).norm();
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / count;
}

namespace {

Pose2DSequence as_sequence(const std::vector<double>& flat, int frames, int joints) {
  Pose2DSequence s(frames, joints);
  s.coords = flat;
  return s;
}

void check_finite(const std::vector<double>& x, int step, const char* what) {
  for (double c : x) {
    if (!std::isfinite(c)) {
      fail(Errc::numerical, std::string("lift: non-finite ") + what + " at step " + std::to_string(step));
    }
  }
}

}  // namespace

LiftResult lift(const Pose2DSequence& input2d, const Denoiser& denoiser, const CmasConfig& config,
                const SkeletonTopology& topo) {
  config.validate();
  input2d.validate();
  const int L = input2d.frames;
  const int J = input2d.joints;
  if (J != topo.joint_count()) fail(Errc::config, "lift: input joint count does not match topology");
  if (denoiser.frames() != L || denoiser.joints() != J) {
    fail(Errc::config, "lift: input is " + std::to_string(L) + "x" + std::to_string(J) +
                           " but the denoiser expects " + std::to_string(denoiser.frames()) + "x" +
                           std::to_string(denoiser.joints()));
  }

  const CameraRig rig = rig_for(config);
  const int V = rig.size();
  const int v0 = rig.reference_index;
  const ViewWeights weights = view_weights(V, config.w_ref, v0);
  const NoiseSchedule schedule = cosine_schedule(config.steps);
  const int threads = resolve_threads(config.threads);

  RngStream noise_rng = init_noise_stream(config);
  ViewLatents state = init_noise(config, L, J, rig, noise_rng);

  // Targets for the consistency block; the reference slot always holds the
  // observed input (with its mask).
  std::vector<Pose2DSequence> targets(static_cast<std::size_t>(V), Pose2DSequence(L, J));
  targets[static_cast<std::size_t>(v0)] = input2d;

  Pose3DSequence X = backproject(input2d, rig.reference(), config.rig.distance);
  LiftResult result;

  auto consistency = [&](int step) {
    if (targets[static_cast<std::size_t>(v0)].coords != input2d.coords) {
      fail(Errc::numerical, "lift: reference target diverged from the input at step " + std::to_string(step));
    }
    TriangulationResult tri =
        triangulate(targets, rig, weights, config.lambda_bone, topo, X, config.optimizer);
    X = std::move(tri.pose);
    if (!X.all_finite()) fail(Errc::numerical, "lift: non-finite 3D motion at step " + std::to_string(step));
    StepDiagnostics d;
    d.step = step;
    d.loss = tri.final_loss;
    d.ref_err = reprojection_error(X, input2d, rig.reference());
    d.bone_var = bone_variance_loss(X, topo);
    d.depth_clamps = tri.depth_clamps;
    result.diagnostics.push_back(d);
  };

  for (int t = config.steps; t >= 1; --t) {
    // (a) clean predictions for every virtual view, (b) anchor the reference.
    parallel_for(static_cast<std::size_t>(V), threads, [&](std::size_t v) {
      if (static_cast<int>(v) == v0) return;
      std::vector<double> x0 = denoiser.predict_clean(state.latents[v], t, static_cast<int>(v));
      if (x0.size() != static_cast<std::size_t>(L) * J * 2) {
        fail(Errc::shape, "lift: denoiser returned a tensor of the wrong size");
      }
      check_finite(x0, t, "denoiser output");
      targets[v].coords = std::move(x0);
    });
    // (c) triangulate.
    consistency(t);
    // (d) reproject, (e) posterior step per view.
    parallel_for(static_cast<std::size_t>(V), threads, [&](std::size_t v) {
      const Pose2DSequence reproj = project(X, rig.views[v]);
      RngStream rng = rng_stream(config.seed, static_cast<std::uint64_t>(t), v);
      state.latents[v] = posterior_sample(state.latents[v], reproj.coords, t, schedule, rng);
      check_finite(state.latents[v], t, "latent");
    });
    state.step = t - 1;
  }

  // Final triangulation of the clean latents, anchored the same way.
  for (int v = 0; v < V; ++v) {
    if (v == v0) continue;
    targets[static_cast<std::size_t>(v)] = as_sequence(state.latents[static_cast<std::size_t>(v)], L, J);
  }
  consistency(0);
  result.pose = std::move(X);
  return result;
}

OracleDenoiser::OracleDenoiser(Pose3DSequence truth, CameraRig rig) : truth_(std::move(truth)) {
  rig.validate();
  for (const auto& view : rig.views) projections_.push_back(project(truth_, view));
}

std::vector<double> OracleDenoiser::predict_clean(std::span<const double> /*x_t*/, int /*t*/,
                                                  int view) const {
  if (view < 0 || view >= static_cast<int>(projections_.size())) {
    fail(Errc::domain, "oracle denoiser: view index out of range");
  }
  return projections_[static_cast<std::size_t>(view)].coords;
}

}  // namespace cmas
