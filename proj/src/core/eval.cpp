#include "cmas/eval.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "cmas/error.hpp"

namespace cmas {

Alignment parse_alignment(const std::string& name) {
  if (name == "none") return Alignment::none;
  if (name == "root") return Alignment::root;
  if (name == "procrustes") return Alignment::procrustes;
  fail(Errc::config, "unknown alignment '" + name + "' (none|root|procrustes)");
}

const char* alignment_name(Alignment a) {
  switch (a) {
    case Alignment::none:
      return "none";
    case Alignment::root:
      return "root";
    case Alignment::procrustes:
      return "procrustes";
  }
  return "none";
}

double mpjpe(const Pose3DSequence& pred, const Pose3DSequence& gt, Alignment alignment,
             int root_index) {
  if (pred.frames != gt.frames || pred.joints != gt.joints ||
      pred.coords.size() != gt.coords.size() || pred.frames < 1) {
    fail(Errc::shape, "mpjpe: prediction and ground truth shapes differ");
  }
  if (root_index < 0 || root_index >= gt.joints) fail(Errc::domain, "mpjpe: root index out of range");
  const int L = gt.frames, J = gt.joints;
  double total = 0.0;
  switch (alignment) {
    case Alignment::none:
      for (int l = 0; l < L; ++l)
        for (int j = 0; j < J; ++j) total += (pred.at(l, j) - gt.at(l, j)).norm();
      break;
    case Alignment::root:
      for (int l = 0; l < L; ++l) {
        const Eigen::Vector3d pr = pred.at(l, root_index), gr = gt.at(l, root_index);
        for (int j = 0; j < J; ++j) total += ((pred.at(l, j) - pr) - (gt.at(l, j) - gr)).norm();
      }
      break;
    case Alignment::procrustes: {
      const Eigen::Index n = static_cast<Eigen::Index>(L) * J;
      Eigen::Matrix3Xd src(3, n), dst(3, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        src.col(i) = Eigen::Map<const Eigen::Vector3d>(pred.coords.data() + 3 * i);
        dst.col(i) = Eigen::Map<const Eigen::Vector3d>(gt.coords.data() + 3 * i);
      }
      const Eigen::Matrix4d T = Eigen::umeyama(src, dst, true);
      const Eigen::Matrix3Xd aligned = (T.topLeftCorner<3, 3>() * src).colwise() + T.topRightCorner<3, 1>();
      total = (aligned - dst).colwise().norm().sum();
      break;
    }
  }
  return 1000.0 * total / (static_cast<double>(L) * J);
}

namespace {

struct RestPose {
  std::vector<int> parent;             // per joint, -1 for root
  std::vector<int> order;              // joints, parents before children
  std::vector<Eigen::Vector3d> dir;    // unit rest direction per joint (from parent)
  std::vector<double> length;          // per joint (from parent)
  std::vector<double> amplitude_scale; // per joint
};

RestPose rooted(const SkeletonTopology& topo) {
  const int J = topo.joint_count();
  std::vector<std::vector<int>> adj(J);
  for (const Bone& b : topo.bones()) {
    adj[b.parent].push_back(b.child);
    adj[b.child].push_back(b.parent);
  }
  RestPose r;
  r.parent.assign(J, -1);
  r.dir.assign(J, Eigen::Vector3d::Zero());
  r.length.assign(J, 0.0);
  r.amplitude_scale.assign(J, 0.0);
  std::vector<char> seen(J, 0);
  r.order.push_back(topo.root());
  seen[topo.root()] = 1;
  for (std::size_t i = 0; i < r.order.size(); ++i) {
    const int u = r.order[i];
    for (int w : adj[u]) {
      if (seen[w]) continue;
      seen[w] = 1;
      r.parent[w] = u;
      r.order.push_back(w);
    }
  }
  return r;
}

bool is_default_layout(const SkeletonTopology& topo) {
  return topo.names() == default_topology().names() &&
         topo.bone_count() == default_topology().bone_count() && topo.root() == 0;
}

// Standing subject, y up, facing +z (towards rig view 0). Left is +x.
void anatomical_rest(RestPose& r) {
  struct Rest { Eigen::Vector3d d; double len; double amp; };
  const Rest rest[13] = {
      {{0, 0, 0}, 0.0, 0.0},                 // pelvis
      {{0, 1, 0.05}, 0.60, 0.15},            // neck
      {{0, 1, 0.12}, 0.28, 0.25},            // head
      {{1, -0.1, -0.05}, 0.20, 0.10},        // l_shoulder
      {{0.15, -1, 0.1}, 0.30, 0.9},          // l_elbow
      {{0, -0.6, 0.8}, 0.27, 0.8},           // l_wrist
      {{-1, -0.1, -0.05}, 0.20, 0.10},       // r_shoulder
      {{-0.15, -1, 0.1}, 0.30, 0.9},         // r_elbow
      {{0, -0.6, 0.8}, 0.27, 0.8},           // r_wrist
      {{0.2, -1, 0.08}, 0.50, 0.45},         // l_knee
      {{0, -1, -0.12}, 0.48, 0.45},          // l_ankle
      {{-0.2, -1, 0.08}, 0.50, 0.45},        // r_knee
      {{0, -1, -0.12}, 0.48, 0.45},          // r_ankle
  };
  for (int j = 0; j < 13; ++j) {
    if (r.parent[j] < 0) continue;
    r.dir[j] = rest[j].d.normalized();
    r.length[j] = rest[j].len;
    r.amplitude_scale[j] = rest[j].amp;
  }
}

void random_rest(RestPose& r, RngStream& rng) {
  for (int j : r.order) {
    if (r.parent[j] < 0) continue;
    Eigen::Vector3d d(rng.normal(), rng.normal(), rng.normal());
    if (d.norm() < 1e-6) d = Eigen::Vector3d::UnitY();
    r.dir[j] = d.normalized();
    r.length[j] = rng.uniform(0.2, 0.5);
    r.amplitude_scale[j] = 0.5;
  }
}

}  // namespace

Pose3DSequence synth_motion(const SkeletonTopology& topo, int frames, RngStream& rng,
                            const MotionParams& params) {
  if (frames < 1) fail(Errc::domain, "synth_motion: need at least one frame");
  RestPose rest = rooted(topo);
  if (is_default_layout(topo)) {
    anatomical_rest(rest);
  } else {
    random_rest(rest, rng);
  }
  const int J = topo.joint_count();
  const double two_pi = 2.0 * std::numbers::pi;
  auto period = [&] { return rng.uniform(params.min_period, params.max_period); };

  struct Wave { Eigen::Vector3d axis; double amp, omega, phase; };
  std::vector<Wave> waves(J);
  for (int j = 0; j < J; ++j) {
    Eigen::Vector3d axis(rng.normal(), 0.5 * rng.normal(), rng.normal());
    if (axis.norm() < 1e-6) axis = Eigen::Vector3d::UnitX();
    waves[j] = {axis.normalized(),
                params.amplitude * rest.amplitude_scale[j] * rng.uniform(0.4, 1.0),
                two_pi / period(), rng.uniform(0.0, two_pi)};
  }
  const double yaw0 = rng.uniform(-params.yaw_range, params.yaw_range);
  const Wave yaw{Eigen::Vector3d::UnitY(), params.amplitude * 0.15, two_pi / (2.0 * period()),
                 rng.uniform(0.0, two_pi)};
  const double sway_omega = two_pi / (2.0 * period());
  const double sway_phase = rng.uniform(0.0, two_pi);

  Pose3DSequence out(frames, J);
  std::vector<Eigen::Matrix3d> global(J);
  for (int l = 0; l < frames; ++l) {
    const double heading = yaw0 + yaw.amp * std::sin(yaw.omega * l + yaw.phase);
    const Eigen::Matrix3d base = Eigen::AngleAxisd(heading, Eigen::Vector3d::UnitY()).toRotationMatrix();
    const double s = params.amplitude * params.root_sway;
    const Eigen::Vector3d root_pos(s * std::sin(sway_omega * l + sway_phase), 0.0,
                                   s * std::cos(sway_omega * l + sway_phase) - s);
    for (int j : rest.order) {
      const int p = rest.parent[j];
      const Wave& w = waves[j];
      const Eigen::Matrix3d local =
          Eigen::AngleAxisd(w.amp * std::sin(w.omega * l + w.phase), w.axis).toRotationMatrix();
      if (p < 0) {
        global[j] = base * local;
        out.at(l, j) = root_pos;
      } else {
        global[j] = global[p] * local;
        out.at(l, j) = out.at(l, p) + rest.length[j] * (global[j] * rest.dir[j]);
      }
    }
  }
  return out;
}

SyntheticDataset make_dataset(int count, const SkeletonTopology& topo, const CameraRig& rig,
                              int frames, RngStream& rng, const MotionParams& params) {
  if (count < 1) fail(Errc::domain, "make_dataset: need at least one sequence");
  rig.validate();
  constexpr int kMaxRetries = 16;
  SyntheticDataset ds;
  ds.projections.resize(rig.views.size());
  for (int n = 0; n < count; ++n) {
    bool ok = false;
    for (int attempt = 0; attempt < kMaxRetries && !ok; ++attempt) {
      RngStream seq_rng(rng.next_u64());
      Pose3DSequence motion = synth_motion(topo, frames, seq_rng, params);
      std::vector<Pose2DSequence> views;
      try {
        for (const auto& cam : rig.views) views.push_back(project(motion, cam));
      } catch (const Error& e) {
        if (e.code() != Errc::projection) throw;
        continue;
      }
      ds.motions.push_back(std::move(motion));
      for (std::size_t v = 0; v < views.size(); ++v) ds.projections[v].push_back(std::move(views[v]));
      ok = true;
    }
    if (!ok) fail(Errc::projection, "make_dataset: could not place motion " + std::to_string(n) +
                                        " in front of every camera");
  }
  return ds;
}

Pose3DSequence baseline_lift(const Pose2DSequence& input2d, const CameraView& reference_view,
                             double depth) {
  if (!(depth > 0.0)) fail(Errc::domain, "baseline_lift: depth must be positive");
  return backproject(input2d, reference_view, depth);
}

}  // namespace cmas
