#include "cmas/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cmas/error.hpp"

namespace cmas {

SkeletonTopology::SkeletonTopology(int joints, std::vector<Bone> bones,
                                   int root, std::vector<std::string> names)
    : joints_(joints), bones_(std::move(bones)), root_(root),
      names_(std::move(names)) {
  if (joints_ <= 0) fail(Errc::domain, "topology: joint count must be positive");
  if (root_ < 0 || root_ >= joints_) {
    fail(Errc::domain, "topology: root index out of range");
  }
  if (!names_.empty() && static_cast<int>(names_.size()) != joints_) {
    fail(Errc::shape, "topology: names must list every joint");
  }
  std::set<std::pair<int, int>> seen;
  for (const Bone& b : bones_) {
    if (b.parent < 0 || b.parent >= joints_ || b.child < 0 ||
        b.child >= joints_) {
      fail(Errc::domain, "topology: bone index out of range");
    }
    if (b.parent == b.child) fail(Errc::domain, "topology: self-loop bone");
    const auto key = std::minmax(b.parent, b.child);
    if (!seen.insert(key).second) fail(Errc::domain, "topology: duplicate bone");
  }
  if (static_cast<int>(bones_.size()) != joints_ - 1) {
    fail(Errc::domain, "topology: a tree over J joints has exactly J-1 bones");
  }
  // J-1 distinct edges + connectivity => tree.
  std::vector<std::vector<int>> adj(joints_);
  for (const Bone& b : bones_) {
    adj[b.parent].push_back(b.child);
    adj[b.child].push_back(b.parent);
  }
  std::vector<char> visited(joints_, 0);
  std::vector<int> stack{root_};
  visited[root_] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int w : adj[u]) {
      if (!visited[w]) {
        visited[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  if (reached != joints_) fail(Errc::domain, "topology: bone graph is not connected");
}

int SkeletonTopology::find(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

nlohmann::json SkeletonTopology::to_json() const {
  nlohmann::json j;
  j["joints"] = joints_;
  j["root"] = root_;
  auto bones = nlohmann::json::array();
  for (const Bone& b : bones_) bones.push_back({b.parent, b.child});
  j["bones"] = bones;
  if (!names_.empty()) j["names"] = names_;
  return j;
}

SkeletonTopology SkeletonTopology::from_json(const nlohmann::json& j) {
  try {
    std::vector<Bone> bones;
    for (const auto& b : j.at("bones")) {
      if (b.size() != 2) fail(Errc::config, "topology: bone entries are [parent, child]");
      bones.push_back({b[0].get<int>(), b[1].get<int>()});
    }
    std::vector<std::string> names;
    if (j.contains("names")) names = j["names"].get<std::vector<std::string>>();
    return SkeletonTopology(j.at("joints").get<int>(), std::move(bones),
                            j.at("root").get<int>(), std::move(names));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, std::string("topology json: ") + e.what());
  }
}

const SkeletonTopology& default_topology() {
  static const SkeletonTopology topo(
      13,
      {{0, 1}, {1, 2},                   // spine, neck-head
       {1, 3}, {3, 4}, {4, 5},           // left arm
       {1, 6}, {6, 7}, {7, 8},           // right arm
       {0, 9}, {9, 10},                  // left leg
       {0, 11}, {11, 12}},               // right leg
      0,
      {"pelvis", "neck", "head", "l_shoulder", "l_elbow", "l_wrist",
       "r_shoulder", "r_elbow", "r_wrist", "l_knee", "l_ankle", "r_knee",
       "r_ankle"});
  return topo;
}

namespace {

void check_shape(const Pose3DSequence& seq, const SkeletonTopology& topo) {
  if (seq.joints != topo.joint_count() ||
      seq.coords.size() != static_cast<std::size_t>(seq.frames) * seq.joints * 3) {
    fail(Errc::shape, "pose sequence joint count " + std::to_string(seq.joints) +
                          " does not match topology (" +
                          std::to_string(topo.joint_count()) + ")");
  }
}

}  // namespace

std::vector<double> bone_lengths(const Pose3DSequence& seq, int frame,
                                 const SkeletonTopology& topo) {
  check_shape(seq, topo);
  if (frame < 0 || frame >= seq.frames) fail(Errc::shape, "frame index out of range");
  std::vector<double> out;
  out.reserve(topo.bones().size());
  for (const Bone& b : topo.bones()) {
    out.push_back((seq.at(frame, b.child) - seq.at(frame, b.parent)).norm());
  }
  return out;
}

double accumulate_bone_variance(const Pose3DSequence& seq,
                                const SkeletonTopology& topo, double scale,
                                std::span<double> grad) {
  check_shape(seq, topo);
  if (seq.frames < 1) fail(Errc::shape, "bone variance needs at least one frame");
  const int L = seq.frames;
  const int B = topo.bone_count();
  if (B == 0) return 0.0;
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != seq.coords.size()) {
    fail(Errc::shape, "gradient buffer size mismatch");
  }

  std::vector<double> len(L);
  double loss = 0.0;
  for (const Bone& b : topo.bones()) {
    double mean = 0.0;
    for (int l = 0; l < L; ++l) {
      len[l] = (seq.at(l, b.child) - seq.at(l, b.parent)).norm();
      mean += len[l];
    }
    mean /= L;
    double var = 0.0;
    for (int l = 0; l < L; ++l) var += (len[l] - mean) * (len[l] - mean);
    loss += var / L;
    if (!want_grad) continue;
    // d var / d b_l = 2 (b_l - mean) / L; the mean's own derivative cancels.
    const double k = scale * 2.0 / (static_cast<double>(L) * B);
    for (int l = 0; l < L; ++l) {
      if (len[l] <= 0.0) continue;
      const Eigen::Vector3d u =
          (seq.at(l, b.child) - seq.at(l, b.parent)) / len[l];
      const Eigen::Vector3d g = k * (len[l] - mean) * u;
      double* gc = grad.data() + seq.index(l, b.child);
      double* gp = grad.data() + seq.index(l, b.parent);
      for (int d = 0; d < 3; ++d) {
        gc[d] += g[d];
        gp[d] -= g[d];
      }
    }
  }
  return scale * loss / B;
}

double bone_variance_loss(const Pose3DSequence& seq,
                          const SkeletonTopology& topo) {
  return accumulate_bone_variance(seq, topo, 1.0, {});
}

std::vector<double> bone_variance_gradient(const Pose3DSequence& seq,
                                           const SkeletonTopology& topo) {
  std::vector<double> grad(seq.coords.size(), 0.0);
  accumulate_bone_variance(seq, topo, 1.0, grad);
  return grad;
}

}  // namespace cmas
