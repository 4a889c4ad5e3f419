#include "cmas/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cmas/error.hpp"

namespace fs = std::filesystem;

namespace cmas {

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::io, "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::io, "cannot write " + path);
  os << text;
  if (!os) fail(Errc::io, "failed writing " + path);
}

namespace {

std::vector<nlohmann::json> parse_lines(const std::string& text, const std::string& what) {
  std::vector<nlohmann::json> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::config, what + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) fail(Errc::config, what + ": no frames");
  return out;
}

int frame_label(const std::vector<int>& frame_index, int l) {
  return frame_index.empty() ? l : frame_index.at(static_cast<std::size_t>(l));
}

}  // namespace

std::string pose2d_to_jsonl(const Pose2DSequence& seq, const std::vector<int>& frame_index) {
  std::string out;
  for (int l = 0; l < seq.frames; ++l) {
    nlohmann::json row;
    row["f"] = frame_label(frame_index, l);
    auto xy = nlohmann::json::array();
    auto mask = nlohmann::json::array();
    for (int j = 0; j < seq.joints; ++j) {
      xy.push_back({seq.at(l, j).x(), seq.at(l, j).y()});
      mask.push_back(seq.observed(l, j));
    }
    row["xy"] = std::move(xy);
    row["mask"] = std::move(mask);
    out += row.dump();
    out += '\n';
  }
  return out;
}

void write_pose2d_jsonl(const std::string& path, const Pose2DSequence& seq,
                        const std::vector<int>& frame_index) {
  write_text(path, pose2d_to_jsonl(seq, frame_index));
}

Pose2DSequence read_pose2d_jsonl(const std::string& path, std::vector<int>* frame_index) {
  const auto rows = parse_lines(read_text(path), path);
  Pose2DSequence seq;
  try {
    const int J = static_cast<int>(rows.front().at("xy").size());
    seq = Pose2DSequence(static_cast<int>(rows.size()), J);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(seq.frames) * J, 1);
    bool any_masked = false;
    for (int l = 0; l < seq.frames; ++l) {
      const auto& row = rows[static_cast<std::size_t>(l)];
      const auto& xy = row.at("xy");
      if (static_cast<int>(xy.size()) != J) fail(Errc::shape, path + ": frames have different joint counts");
      for (int j = 0; j < J; ++j) {
        const auto& p = xy.at(static_cast<std::size_t>(j));
        // null marks a missing coordinate
        seq.at(l, j) = Eigen::Vector2d(p.at(0).is_null() ? 0.0 : p.at(0).get<double>(),
                                       p.at(1).is_null() ? 0.0 : p.at(1).get<double>());
      }
      if (row.contains("mask")) {
        const auto& m = row["mask"];
        if (static_cast<int>(m.size()) != J) fail(Errc::shape, path + ": mask has the wrong length");
        for (int j = 0; j < J; ++j) {
          const bool obs = m[static_cast<std::size_t>(j)].get<bool>();
          mask[static_cast<std::size_t>(l) * J + j] = obs ? 1 : 0;
          any_masked = any_masked || !obs;
        }
      }
      if (frame_index) frame_index->push_back(row.value("f", l));
    }
    if (any_masked) seq.mask = std::move(mask);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, path + ": " + e.what());
  }
  seq.validate();
  return seq;
}

std::string pose3d_to_jsonl(const Pose3DSequence& seq, const std::vector<int>& frame_index) {
  std::string out;
  for (int l = 0; l < seq.frames; ++l) {
    nlohmann::json row;
    row["f"] = frame_label(frame_index, l);
    auto xyz = nlohmann::json::array();
    for (int j = 0; j < seq.joints; ++j) {
      const auto p = seq.at(l, j);
      xyz.push_back({p.x(), p.y(), p.z()});
    }
    row["xyz"] = std::move(xyz);
    out += row.dump();
    out += '\n';
  }
  return out;
}

void write_pose3d_jsonl(const std::string& path, const Pose3DSequence& seq,
                        const std::vector<int>& frame_index) {
  write_text(path, pose3d_to_jsonl(seq, frame_index));
}

Pose3DSequence read_pose3d_jsonl(const std::string& path, std::vector<int>* frame_index) {
  const auto rows = parse_lines(read_text(path), path);
  Pose3DSequence seq;
  try {
    const int J = static_cast<int>(rows.front().at("xyz").size());
    seq = Pose3DSequence(static_cast<int>(rows.size()), J);
    for (int l = 0; l < seq.frames; ++l) {
      const auto& row = rows[static_cast<std::size_t>(l)];
      const auto& xyz = row.at("xyz");
      if (static_cast<int>(xyz.size()) != J) fail(Errc::shape, path + ": frames have different joint counts");
      for (int j = 0; j < J; ++j) {
        const auto& p = xyz.at(static_cast<std::size_t>(j));
        seq.at(l, j) = Eigen::Vector3d(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
      }
      if (frame_index) frame_index->push_back(row.value("f", l));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, path + ": " + e.what());
  }
  if (!seq.all_finite()) fail(Errc::domain, path + ": non-finite coordinate");
  return seq;
}

std::string diagnostics_to_jsonl(const std::vector<StepDiagnostics>& diagnostics, int window) {
  std::string out;
  for (const auto& d : diagnostics) {
    nlohmann::json row;
    row["t"] = d.step;
    row["loss"] = d.loss;
    row["ref_err"] = d.ref_err;
    row["bone_var"] = d.bone_var;
    if (window >= 0) row["window"] = window;
    out += row.dump();
    out += '\n';
  }
  return out;
}

JointMap coco17_joint_map() {
  JointMap m;
  m.source_joints = 17;
  m.sources = {{11, 12}, {5, 6}, {0},  {5},  {7},  {9}, {6},
               {8},      {10},   {13}, {15}, {14}, {16}};
  return m;
}

JointMap load_joint_map(const std::string& path) {
  JointMap m;
  try {
    const auto j = nlohmann::json::parse(read_text(path));
    m.source_joints = j.at("source_joints").get<int>();
    for (const auto& entry : j.at("map")) {
      if (entry.is_array()) {
        m.sources.push_back(entry.get<std::vector<int>>());
      } else {
        m.sources.push_back({entry.get<int>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, "joint map " + path + ": " + e.what());
  }
  for (const auto& s : m.sources) {
    if (s.empty()) fail(Errc::config, "joint map: every joint needs at least one source");
    for (int i : s) {
      if (i < 0 || i >= m.source_joints) fail(Errc::config, "joint map: source index out of range");
    }
  }
  if (m.sources.empty()) fail(Errc::config, "joint map: empty map");
  return m;
}

RawPoseTrack parse_alphapose(const std::string& text, const JointMap& map) {
  RawPoseTrack track;
  track.joints = map.joints();
  try {
    const auto doc = nlohmann::json::parse(text);
    if (!doc.is_array()) fail(Errc::config, "pose file: expected a JSON array of frames");
    int f = 0;
    for (const auto& frame : doc) {
      const auto kp = frame.at("keypoints").get<std::vector<double>>();
      if (static_cast<int>(kp.size()) != 3 * map.source_joints) {
        fail(Errc::shape, "pose file: frame " + std::to_string(f) + " has " +
                              std::to_string(kp.size()) + " values, expected " +
                              std::to_string(3 * map.source_joints));
      }
      for (const auto& src : map.sources) {
        double x = 0.0, y = 0.0, c = 1.0;
        for (int i : src) {
          x += kp[3 * static_cast<std::size_t>(i)];
          y += kp[3 * static_cast<std::size_t>(i) + 1];
          c = std::min(c, kp[3 * static_cast<std::size_t>(i) + 2]);
        }
        track.coords.push_back(x / static_cast<double>(src.size()));
        track.coords.push_back(y / static_cast<double>(src.size()));
        track.confidence.push_back(std::clamp(c, 0.0, 1.0));
      }
      track.frame_index.push_back(frame.value("frame", f));
      ++f;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, std::string("pose file: ") + e.what());
  }
  if (track.frame_index.empty()) fail(Errc::config, "pose file: no frames");
  track.validate();
  return track;
}

RawPoseTrack read_alphapose(const std::string& path, const JointMap& map) {
  RawPoseTrack t = parse_alphapose(read_text(path), map);
  t.video_id = fs::path(path).stem().string();
  return t;
}

namespace {

std::string motion_name(int n, const std::string& suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "motion_%04d_%s.jsonl", n, suffix.c_str());
  return buf;
}

}  // namespace

void write_dataset(const std::string& dir, const SyntheticDataset& dataset) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::io, "cannot create directory " + dir + ": " + ec.message());
  for (std::size_t n = 0; n < dataset.motions.size(); ++n) {
    const int id = static_cast<int>(n);
    write_pose3d_jsonl((fs::path(dir) / motion_name(id, "3d")).string(), dataset.motions[n]);
    for (std::size_t v = 0; v < dataset.projections.size(); ++v) {
      write_pose2d_jsonl((fs::path(dir) / motion_name(id, "view" + std::to_string(v))).string(),
                         dataset.projections[v][n]);
    }
  }
}

SyntheticDataset read_dataset(const std::string& dir) {
  if (!fs::is_directory(dir)) fail(Errc::config, "dataset directory " + dir + " does not exist");
  std::vector<std::string> motions;
  std::map<std::string, std::vector<std::pair<int, std::string>>> views;  // prefix -> (v, path)
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("motion_", 0) != 0 || entry.path().extension() != ".jsonl") continue;
    const auto us = name.find('_', 7);
    if (us == std::string::npos) continue;
    const std::string prefix = name.substr(0, us);
    const std::string tag = entry.path().stem().string().substr(us + 1);
    if (tag == "3d") {
      motions.push_back(prefix);
    } else if (tag.rfind("view", 0) == 0) {
      views[prefix].emplace_back(std::stoi(tag.substr(4)), entry.path().string());
    }
  }
  if (motions.empty()) fail(Errc::config, "dataset directory " + dir + " holds no motion_*_3d.jsonl files");
  std::sort(motions.begin(), motions.end());
  SyntheticDataset ds;
  std::size_t V = 0;
  for (std::size_t n = 0; n < motions.size(); ++n) {
    auto& vs = views[motions[n]];
    std::sort(vs.begin(), vs.end());
    if (n == 0) {
      V = vs.size();
      ds.projections.resize(V);
    }
    if (vs.size() != V) fail(Errc::config, "dataset: " + motions[n] + " has a different number of views");
    for (std::size_t v = 0; v < V; ++v) {
      if (vs[v].first != static_cast<int>(v)) fail(Errc::config, "dataset: view files are not numbered 0..V-1");
    }
    ds.motions.push_back(read_pose3d_jsonl((fs::path(dir) / (motions[n] + "_3d.jsonl")).string()));
    for (std::size_t v = 0; v < V; ++v) ds.projections[v].push_back(read_pose2d_jsonl(vs[v].second));
    if (ds.motions.back().frames != ds.motions.front().frames ||
        ds.motions.back().joints != ds.motions.front().joints) {
      fail(Errc::shape, "dataset: motions have different shapes");
    }
  }
  return ds;
}

}  // namespace cmas
