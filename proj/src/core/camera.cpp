#include "cmas/camera.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>

#include "cmas/error.hpp"

namespace cmas {

void CameraView::validate() const {
  const double ortho =
      (rotation * rotation.transpose() - Eigen::Matrix3d::Identity())
          .cwiseAbs()
          .maxCoeff();
  if (!(ortho <= 1e-9) || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    fail(Errc::domain, "camera: rotation is not a proper rotation matrix");
  }
  if (!(focal > 0.0)) fail(Errc::domain, "camera: focal length must be positive");
  if (!translation.allFinite() || !principal_point.allFinite()) {
    fail(Errc::domain, "camera: non-finite parameters");
  }
}

void CameraRig::validate() const {
  if (views.empty()) fail(Errc::domain, "rig: needs at least one view");
  if (reference_index < 0 || reference_index >= size()) {
    fail(Errc::domain, "rig: reference index out of range");
  }
  for (const auto& v : views) v.validate();
}

nlohmann::json CameraRig::to_json() const {
  nlohmann::json j;
  auto arr = nlohmann::json::array();
  for (const auto& v : views) {
    std::vector<double> r(9);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) r[a * 3 + b] = v.rotation(a, b);
    arr.push_back({{"R", r},
                   {"t", {v.translation.x(), v.translation.y(), v.translation.z()}},
                   {"f", v.focal},
                   {"pp", {v.principal_point.x(), v.principal_point.y()}}});
  }
  j["views"] = arr;
  j["reference_index"] = reference_index;
  return j;
}

CameraRig CameraRig::from_json(const nlohmann::json& j) {
  CameraRig rig;
  try {
    for (const auto& v : j.at("views")) {
      CameraView cam;
      const auto r = v.at("R").get<std::vector<double>>();
      const auto t = v.at("t").get<std::vector<double>>();
      const auto pp = v.at("pp").get<std::vector<double>>();
      if (r.size() != 9 || t.size() != 3 || pp.size() != 2) {
        fail(Errc::config, "rig json: R needs 9, t 3, pp 2 values");
      }
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) cam.rotation(a, b) = r[a * 3 + b];
      cam.translation = {t[0], t[1], t[2]};
      cam.focal = v.at("f").get<double>();
      cam.principal_point = {pp[0], pp[1]};
      rig.views.push_back(cam);
    }
    rig.reference_index = j.at("reference_index").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, std::string("rig json: ") + e.what());
  }
  rig.validate();
  return rig;
}

CameraView look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                   double focal, const Eigen::Vector2d& principal_point) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  const Eigen::Vector3d up(0.0, 1.0, 0.0);
  Eigen::Vector3d right = forward.cross(up);
  if (right.norm() < 1e-12) fail(Errc::domain, "look_at: view direction parallel to up");
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);

  CameraView cam;
  cam.rotation.row(0) = right;
  cam.rotation.row(1) = down;
  cam.rotation.row(2) = forward;
  cam.translation = -cam.rotation * eye;
  cam.focal = focal;
  cam.principal_point = principal_point;
  return cam;
}

CameraRig make_rig(int views, const RigParams& params, int reference_index) {
  if (views < 1) fail(Errc::domain, "make_rig: need at least one view");
  if (!(params.distance > 0.0)) fail(Errc::domain, "make_rig: distance must be positive");
  if (reference_index < 0 || reference_index >= views) {
    fail(Errc::domain, "make_rig: reference index out of range");
  }
  CameraRig rig;
  rig.reference_index = reference_index;
  const double ce = std::cos(params.elevation);
  const double se = std::sin(params.elevation);
  for (int k = 0; k < views; ++k) {
    const double az = 2.0 * std::numbers::pi * k / views;
    const Eigen::Vector3d offset(params.distance * ce * std::sin(az),
                                 params.distance * se,
                                 params.distance * ce * std::cos(az));
    rig.views.push_back(look_at(params.subject_center + offset,
                                params.subject_center, params.distance,
                                Eigen::Vector2d::Zero()));
  }
  return rig;
}

Eigen::Vector2d project_point(const Eigen::Vector3d& world,
                              const CameraView& view) {
  const Eigen::Vector3d pc = view.to_camera(world);
  if (!(pc.z() > 0.0)) fail(Errc::projection, "point behind camera");
  return view.principal_point + view.focal * Eigen::Vector2d(pc.x() / pc.z(), pc.y() / pc.z());
}

Pose2DSequence project(const Pose3DSequence& seq, const CameraView& view) {
  Pose2DSequence out(seq.frames, seq.joints);
  for (int l = 0; l < seq.frames; ++l) {
    for (int j = 0; j < seq.joints; ++j) {
      const Eigen::Vector3d pc = view.to_camera(seq.at(l, j));
      if (!(pc.z() > 0.0)) {
        fail(Errc::projection, "projection: nonpositive depth at frame " +
                                   std::to_string(l) + ", joint " +
                                   std::to_string(j));
      }
      out.at(l, j) = view.principal_point +
                     view.focal * Eigen::Vector2d(pc.x() / pc.z(), pc.y() / pc.z());
    }
  }
  return out;
}

std::vector<double> project_gradient(const Pose3DSequence& seq,
                                     const CameraView& view,
                                     std::span<const double> residual) {
  if (residual.size() != static_cast<std::size_t>(seq.frames) * seq.joints * 2) {
    fail(Errc::shape, "project_gradient: residual must be L x J x 2");
  }
  std::vector<double> grad(seq.coords.size(), 0.0);
  for (int l = 0; l < seq.frames; ++l) {
    for (int j = 0; j < seq.joints; ++j) {
      const Eigen::Vector3d pc = view.to_camera(seq.at(l, j));
      if (!(pc.z() > 0.0)) {
        fail(Errc::projection, "project_gradient: nonpositive depth at frame " +
                                   std::to_string(l) + ", joint " +
                                   std::to_string(j));
      }
      const std::size_t r = (static_cast<std::size_t>(l) * seq.joints + j) * 2;
      const double iz = 1.0 / pc.z();
      const double ru = residual[r], rv = residual[r + 1];
      // d(u,v)/d(pc) = f/z [[1, 0, -x/z], [0, 1, -y/z]]
      const Eigen::Vector3d gc(view.focal * iz * ru, view.focal * iz * rv,
                               -view.focal * iz * iz * (ru * pc.x() + rv * pc.y()));
      Eigen::Map<Eigen::Vector3d>(grad.data() + seq.index(l, j)) =
          view.rotation.transpose() * gc;
    }
  }
  return grad;
}

std::vector<double> project_noise(std::span<const double> noise3d,
                                  const CameraView& view) {
  if (noise3d.size() % 3 != 0) fail(Errc::shape, "project_noise: size not a multiple of 3");
  const std::size_t n = noise3d.size() / 3;
  std::vector<double> out(n * 2);
  const Eigen::Matrix<double, 2, 3> r2 = view.rotation.topRows<2>();
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Map<Eigen::Vector2d>(out.data() + 2 * i) =
        r2 * Eigen::Map<const Eigen::Vector3d>(noise3d.data() + 3 * i);
  }
  return out;
}

Pose3DSequence backproject(const Pose2DSequence& seq, const CameraView& view,
                           double depth) {
  Pose3DSequence out(seq.frames, seq.joints);
  const Eigen::Matrix3d rt = view.rotation.transpose();
  const Eigen::Vector3d c = view.center();
  for (int l = 0; l < seq.frames; ++l) {
    for (int j = 0; j < seq.joints; ++j) {
      Eigen::Vector2d uv = seq.at(l, j);
      if (!uv.allFinite()) uv = view.principal_point;
      const Eigen::Vector2d n = (uv - view.principal_point) / view.focal;
      out.at(l, j) = c + rt * Eigen::Vector3d(n.x() * depth, n.y() * depth, depth);
    }
  }
  return out;
}

}  // namespace cmas
