#include "cmas/triangulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cmas/error.hpp"

namespace cmas {

ViewWeights view_weights(int views, double w_ref, int reference_index) {
  if (views < 1) fail(Errc::domain, "view_weights: need at least one view");
  if (!(w_ref > 0.0 && w_ref <= 1.0)) fail(Errc::domain, "view_weights: w_ref must lie in (0, 1]");
  if (reference_index < 0 || reference_index >= views) {
    fail(Errc::domain, "view_weights: reference index out of range");
  }
  if (views == 1 && w_ref != 1.0) fail(Errc::domain, "view_weights: a single view needs w_ref = 1");
  ViewWeights w;
  w.reference_index = reference_index;
  w.values.assign(static_cast<std::size_t>(views),
                  views > 1 ? (1.0 - w_ref) / (views - 1) : 0.0);
  w.values[static_cast<std::size_t>(reference_index)] = w_ref;
  return w;
}

void OptimizerSettings::validate() const {
  if (!(learning_rate > 0.0)) fail(Errc::domain, "optimizer: learning rate must be positive");
  if (iterations < 1) fail(Errc::domain, "optimizer: iterations must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    fail(Errc::domain, "optimizer: moment decay rates must lie in [0, 1)");
  }
  if (!(epsilon > 0.0) || !(min_depth > 0.0)) fail(Errc::domain, "optimizer: epsilon and min_depth must be positive");
}

namespace {

// Structure-of-arrays evaluation of the weighted reprojection loss plus the
// bone-variance term. Points are indexed n = l * J + j.
class Objective {
 public:
  Objective(std::span<const Pose2DSequence> targets, const CameraRig& rig,
            const ViewWeights& weights, double lambda_bone,
            const SkeletonTopology* topo, int frames, int joints)
      : frames_(frames), joints_(joints),
        points_(static_cast<std::size_t>(frames) * joints),
        lambda_(lambda_bone), topo_(topo) {
    if (static_cast<int>(targets.size()) != rig.size() ||
        static_cast<int>(weights.values.size()) != rig.size()) {
      fail(Errc::shape, "triangulation: need one target and one weight per rig view");
    }
    if (topo != nullptr && joints != topo->joint_count()) fail(Errc::shape, "triangulation: joint count does not match topology");
    if (!(lambda_bone >= 0.0)) fail(Errc::domain, "triangulation: lambda_bone must be >= 0");
    views_.resize(targets.size());
    for (std::size_t v = 0; v < targets.size(); ++v) {
      const Pose2DSequence& tg = targets[v];
      if (tg.frames != frames || tg.joints != joints || tg.coords.size() != points_ * 2) {
        fail(Errc::shape, "triangulation: target " + std::to_string(v) + " has the wrong shape");
      }
      if (!(weights.values[v] >= 0.0)) fail(Errc::domain, "triangulation: negative view weight");
      ViewData& d = views_[v];
      const CameraView& cam = rig.views[v];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) d.r[a * 3 + b] = cam.rotation(a, b);
      const Eigen::Vector3d c = cam.center();
      d.c[0] = c.x(); d.c[1] = c.y(); d.c[2] = c.z();
      d.f = cam.focal;
      d.pu = cam.principal_point.x();
      d.pv = cam.principal_point.y();
      d.tu.resize(points_);
      d.tv.resize(points_);
      d.w.resize(points_);
      for (std::size_t n = 0; n < points_; ++n) {
        const bool obs = tg.mask.empty() || tg.mask[n] != 0;
        const double u = tg.coords[2 * n], vv = tg.coords[2 * n + 1];
        const bool ok = obs && std::isfinite(u) && std::isfinite(vv);
        d.tu[n] = ok ? u : 0.0;
        d.tv[n] = ok ? vv : 0.0;
        d.w[n] = ok ? weights.values[v] : 0.0;
      }
    }
    len_.resize(static_cast<std::size_t>(frames));
  }

  std::size_t points() const { return points_; }

  // Loss at (xs, ys, zs); adds the gradient into (gx, gy, gz) when non-null.
  double evaluate(const double* xs, const double* ys, const double* zs,
                  double* gx, double* gy, double* gz) {
    double loss = 0.0;
    double depth = std::numeric_limits<double>::infinity();
    const std::size_t N = points_;
    for (const ViewData& d : views_) {
      const double r00 = d.r[0], r01 = d.r[1], r02 = d.r[2];
      const double r10 = d.r[3], r11 = d.r[4], r12 = d.r[5];
      const double r20 = d.r[6], r21 = d.r[7], r22 = d.r[8];
      const double cx = d.c[0], cy = d.c[1], cz = d.c[2];
      const double f = d.f, pu = d.pu, pv = d.pv;
      const double* tu = d.tu.data();
      const double* tv = d.tv.data();
      const double* w = d.w.data();
      double acc = 0.0;
      double near = std::numeric_limits<double>::infinity();
      if (gx != nullptr) {
#pragma omp simd reduction(+ : acc) reduction(min : near)
        for (std::size_t n = 0; n < N; ++n) {
          const double dx = xs[n] - cx, dy = ys[n] - cy, dz = zs[n] - cz;
          const double px = r00 * dx + r01 * dy + r02 * dz;
          const double py = r10 * dx + r11 * dy + r12 * dz;
          const double pz = r20 * dx + r21 * dy + r22 * dz;
          near = pz < near ? pz : near;
          const double iz = 1.0 / pz;
          const double ru = pu + f * px * iz - tu[n];
          const double rv = pv + f * py * iz - tv[n];
          acc += w[n] * (ru * ru + rv * rv);
          const double gu = 2.0 * w[n] * f * iz * ru;
          const double gv = 2.0 * w[n] * f * iz * rv;
          const double gw = -(gu * px + gv * py) * iz;
          gx[n] += r00 * gu + r10 * gv + r20 * gw;
          gy[n] += r01 * gu + r11 * gv + r21 * gw;
          gz[n] += r02 * gu + r12 * gv + r22 * gw;
        }
      } else {
#pragma omp simd reduction(+ : acc) reduction(min : near)
        for (std::size_t n = 0; n < N; ++n) {
          const double dx = xs[n] - cx, dy = ys[n] - cy, dz = zs[n] - cz;
          const double px = r00 * dx + r01 * dy + r02 * dz;
          const double py = r10 * dx + r11 * dy + r12 * dz;
          const double pz = r20 * dx + r21 * dy + r22 * dz;
          near = pz < near ? pz : near;
          const double iz = 1.0 / pz;
          const double ru = pu + f * px * iz - tu[n];
          const double rv = pv + f * py * iz - tv[n];
          acc += w[n] * (ru * ru + rv * rv);
        }
      }
      loss += acc;
      depth = std::min(depth, near);
    }
    min_depth_ = depth;
    if (topo_ != nullptr && lambda_ > 0.0) loss += lambda_ * bone_term(xs, ys, zs, gx, gy, gz);
    return loss;
  }

  // Smallest camera-frame depth seen by the last evaluate().
  double last_min_depth() const { return min_depth_; }

  // Moves offending points along each camera's optical axis to depth `floor`.
  void clamp_depth(double* xs, double* ys, double* zs, double floor) const {
    for (const ViewData& d : views_) {
      for (std::size_t n = 0; n < points_; ++n) {
        const double pz = d.r[6] * (xs[n] - d.c[0]) + d.r[7] * (ys[n] - d.c[1]) +
                          d.r[8] * (zs[n] - d.c[2]);
        if (pz < floor) {
          const double shift = floor - pz;
          xs[n] += shift * d.r[6];
          ys[n] += shift * d.r[7];
          zs[n] += shift * d.r[8];
        }
      }
    }
  }

 private:
  struct ViewData {
    double r[9];
    double c[3];
    double f, pu, pv;
    std::vector<double> tu, tv, w;
  };

  double bone_term(const double* xs, const double* ys, const double* zs,
                   double* gx, double* gy, double* gz) {
    const int L = frames_;
    const int B = topo_->bone_count();
    if (B == 0) return 0.0;
    double loss = 0.0;
    const double k = lambda_ * 2.0 / (static_cast<double>(L) * B);
    for (const Bone& b : topo_->bones()) {
      double mean = 0.0;
      for (int l = 0; l < L; ++l) {
        const std::size_t c = static_cast<std::size_t>(l) * joints_ + b.child;
        const std::size_t p = static_cast<std::size_t>(l) * joints_ + b.parent;
        const double dx = xs[c] - xs[p], dy = ys[c] - ys[p], dz = zs[c] - zs[p];
        len_[l] = std::sqrt(dx * dx + dy * dy + dz * dz);
        mean += len_[l];
      }
      mean /= L;
      double var = 0.0;
      for (int l = 0; l < L; ++l) var += (len_[l] - mean) * (len_[l] - mean);
      loss += var / L;
      if (gx == nullptr) continue;
      for (int l = 0; l < L; ++l) {
        if (len_[l] <= 0.0) continue;
        const std::size_t c = static_cast<std::size_t>(l) * joints_ + b.child;
        const std::size_t p = static_cast<std::size_t>(l) * joints_ + b.parent;
        const double s = k * (len_[l] - mean) / len_[l];
        const double ex = s * (xs[c] - xs[p]), ey = s * (ys[c] - ys[p]), ez = s * (zs[c] - zs[p]);
        gx[c] += ex; gy[c] += ey; gz[c] += ez;
        gx[p] -= ex; gy[p] -= ey; gz[p] -= ez;
      }
    }
    return loss / B;
  }

  int frames_;
  int joints_;
  std::size_t points_;
  double lambda_;
  const SkeletonTopology* topo_;
  double min_depth_ = 0.0;
  std::vector<ViewData> views_;
  std::vector<double> len_;
};

struct Soa {
  std::vector<double> x, y, z;

  explicit Soa(const Pose3DSequence& p) {
    const std::size_t n = p.coords.size() / 3;
    x.resize(n); y.resize(n); z.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = p.coords[3 * i];
      y[i] = p.coords[3 * i + 1];
      z[i] = p.coords[3 * i + 2];
    }
  }
  explicit Soa(std::size_t n) : x(n, 0.0), y(n, 0.0), z(n, 0.0) {}

  void store(Pose3DSequence& p) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      p.coords[3 * i] = x[i];
      p.coords[3 * i + 1] = y[i];
      p.coords[3 * i + 2] = z[i];
    }
  }
  void zero() {
    std::fill(x.begin(), x.end(), 0.0);
    std::fill(y.begin(), y.end(), 0.0);
    std::fill(z.begin(), z.end(), 0.0);
  }
};

}  // namespace

double geometry_loss(const Pose3DSequence& X, std::span<const Pose2DSequence> targets,
                     const CameraRig& rig, const ViewWeights& weights) {
  Objective obj(targets, rig, weights, 0.0, nullptr, X.frames, X.joints);
  const Soa s(X);
  const double loss = obj.evaluate(s.x.data(), s.y.data(), s.z.data(), nullptr, nullptr, nullptr);
  if (!(obj.last_min_depth() > 0.0)) fail(Errc::projection, "geometry_loss: a joint is behind a camera");
  return loss;
}

double total_loss(const Pose3DSequence& X, std::span<const Pose2DSequence> targets,
                  const CameraRig& rig, const ViewWeights& weights,
                  double lambda_bone, const SkeletonTopology& topo) {
  Objective obj(targets, rig, weights, lambda_bone, &topo, X.frames, X.joints);
  const Soa s(X);
  const double loss = obj.evaluate(s.x.data(), s.y.data(), s.z.data(), nullptr, nullptr, nullptr);
  if (!(obj.last_min_depth() > 0.0)) fail(Errc::projection, "total_loss: a joint is behind a camera");
  return loss;
}

std::vector<double> total_loss_gradient(const Pose3DSequence& X,
                                        std::span<const Pose2DSequence> targets,
                                        const CameraRig& rig, const ViewWeights& weights,
                                        double lambda_bone, const SkeletonTopology& topo) {
  Objective obj(targets, rig, weights, lambda_bone, &topo, X.frames, X.joints);
  const Soa s(X);
  Soa g(obj.points());
  obj.evaluate(s.x.data(), s.y.data(), s.z.data(), g.x.data(), g.y.data(), g.z.data());
  if (!(obj.last_min_depth() > 0.0)) fail(Errc::projection, "total_loss_gradient: a joint is behind a camera");
  Pose3DSequence out(X.frames, X.joints);
  g.store(out);
  return std::move(out.coords);
}

TriangulationResult triangulate(std::span<const Pose2DSequence> targets,
                                const CameraRig& rig, const ViewWeights& weights,
                                double lambda_bone, const SkeletonTopology& topo,
                                const Pose3DSequence& init,
                                const OptimizerSettings& settings) {
  settings.validate();
  if (!init.all_finite()) fail(Errc::domain, "triangulate: initial pose is not finite");
  Objective obj(targets, rig, weights, lambda_bone, &topo, init.frames, init.joints);
  const std::size_t N = obj.points();

  TriangulationResult result;
  Soa cur(init);
  Soa best = cur, grad(N), m1(N), m2(N);
  double best_loss = std::numeric_limits<double>::infinity();
  double b1t = 1.0, b2t = 1.0;
  const double b1 = settings.beta1, b2 = settings.beta2;
  const double lr = settings.learning_rate, eps = settings.epsilon;

  auto adam = [&](std::vector<double>& x, const std::vector<double>& g,
                  std::vector<double>& m, std::vector<double>& v, double c1, double c2) {
    double* xp = x.data();
    const double* gp = g.data();
    double* mp = m.data();
    double* vp = v.data();
#pragma omp simd
    for (std::size_t n = 0; n < N; ++n) {
      mp[n] = b1 * mp[n] + (1.0 - b1) * gp[n];
      vp[n] = b2 * vp[n] + (1.0 - b2) * gp[n] * gp[n];
      xp[n] -= lr * (mp[n] / c1) / (std::sqrt(vp[n] / c2) + eps);
    }
  };

  for (int it = 0; it <= settings.iterations; ++it) {
    const bool last = it == settings.iterations;
    auto eval = [&] {
      grad.zero();
      return obj.evaluate(cur.x.data(), cur.y.data(), cur.z.data(),
                          last ? nullptr : grad.x.data(), last ? nullptr : grad.y.data(),
                          last ? nullptr : grad.z.data());
    };
    double loss = eval();
    if (obj.last_min_depth() < settings.min_depth) {
      obj.clamp_depth(cur.x.data(), cur.y.data(), cur.z.data(), settings.min_depth);
      ++result.depth_clamps;
      loss = eval();
    }
    if (it == 0) result.initial_loss = loss;
    if (!std::isfinite(loss)) {
      fail(Errc::numerical, "triangulate: non-finite loss at iteration " + std::to_string(it));
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = cur;
    }
    if (last) break;
    b1t *= b1;
    b2t *= b2;
    adam(cur.x, grad.x, m1.x, m2.x, 1.0 - b1t, 1.0 - b2t);
    adam(cur.y, grad.y, m1.y, m2.y, 1.0 - b1t, 1.0 - b2t);
    adam(cur.z, grad.z, m1.z, m2.z, 1.0 - b1t, 1.0 - b2t);
  }
  result.pose = Pose3DSequence(init.frames, init.joints);
  best.store(result.pose);
  result.final_loss = best_loss;
  return result;
}

}  // namespace cmas
