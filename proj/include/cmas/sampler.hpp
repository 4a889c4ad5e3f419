#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cmas/camera.hpp"
#include "cmas/diffusion.hpp"
#include "cmas/rng.hpp"
#include "cmas/skeleton.hpp"
#include "cmas/tensor.hpp"
#include "cmas/triangulate.hpp"

namespace cmas {

/// Every tunable of conditional multi-view ancestral sampling.
struct CmasConfig {
  int views = 7;
  int steps = 100;
  double w_ref = 4.0 / 5.0;
  double lambda_bone = 0.001;
  OptimizerSettings optimizer;
  RigParams rig;
  int reference_index = 0;
  std::uint64_t seed = 0;
  /// Worker threads for the per-view denoise and posterior steps; output does
  /// not depend on it.
  int threads = 1;

  void validate() const;
};

/// Per-view latents x_t at step t.
struct ViewLatents {
  int step = 0;
  std::vector<std::vector<double>> latents;
};

/// Stream used for the shared initial 3D noise. Step index T + 1 is never a
/// posterior step, so it cannot collide with rng_stream(seed, t, v), t <= T.
RngStream init_noise_stream(const CmasConfig& config);

/// Shared eps_3D ~ N(0, I) (L x J x 3) projected into every view.
ViewLatents init_noise(const CmasConfig& config, int frames, int joints, const CameraRig& rig,
                       RngStream& rng);

struct StepDiagnostics {
  int step = 0;
  double loss = 0.0;
  /// Mean image-plane distance between the reference projection and the
  /// observed input, over observed joints.
  double ref_err = 0.0;
  double bone_var = 0.0;
  int depth_clamps = 0;
};

struct LiftResult {
  Pose3DSequence pose;
  std::vector<StepDiagnostics> diagnostics;
};

/// Lifts a normalized 2D sequence seen from the rig's reference view to 3D.
/// The reference view's clean target is the input itself at every step.
LiftResult lift(const Pose2DSequence& input2d, const Denoiser& denoiser, const CmasConfig& config,
                const SkeletonTopology& topo = default_topology());

/// Rig used by lift() for `config`.
CameraRig rig_for(const CmasConfig& config);

/// Mean reprojection distance onto `view` over observed joints of `observed`.
double reprojection_error(const Pose3DSequence& X, const Pose2DSequence& observed,
                          const CameraView& view);

/// Denoiser that ignores its input and returns the projection of a known
/// motion into the requested rig view.
class OracleDenoiser final : public Denoiser {
 public:
  OracleDenoiser(Pose3DSequence truth, CameraRig rig);

  std::vector<double> predict_clean(std::span<const double> x_t, int t, int view) const override;
  int frames() const override { return truth_.frames; }
  int joints() const override { return truth_.joints; }

 private:
  Pose3DSequence truth_;
  std::vector<Pose2DSequence> projections_;
};

}  // namespace cmas
