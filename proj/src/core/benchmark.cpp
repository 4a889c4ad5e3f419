#include "cmas/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "cmas/error.hpp"
#include "cmas/parallel.hpp"

namespace cmas {

BenchmarkData make_benchmark_data(const SyntheticDataset& dataset, double noise_sigma,
                                  std::uint64_t seed) {
  if (dataset.projections.empty() || dataset.motions.empty()) {
    fail(Errc::config, "benchmark: empty dataset");
  }
  if (!(noise_sigma >= 0.0)) fail(Errc::domain, "benchmark: noise sigma must be >= 0");
  BenchmarkData data;
  data.truth = dataset.motions;
  data.inputs = dataset.projections.front();
  for (std::size_t n = 0; n < data.inputs.size(); ++n) {
    RngStream rng = rng_stream(seed, 0, n);
    for (double& c : data.inputs[n].coords) c += noise_sigma * rng.normal();
  }
  return data;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::uint64_t sequence_seed(std::uint64_t base, std::size_t n) {
  return splitmix64(splitmix64(base) ^ static_cast<std::uint64_t>(n));
}

namespace {

auto report_key(const BenchmarkReport& r) {
  return std::make_tuple(r.group, r.config.views, r.config.w_ref, r.config.lambda_bone, r.label);
}

void check_data(const BenchmarkData& data) {
  if (data.truth.empty()) fail(Errc::config, "benchmark: no sequences");
  if (data.truth.size() != data.inputs.size()) {
    fail(Errc::shape, "benchmark: truth and input counts differ");
  }
}

}  // namespace

std::vector<BenchmarkReport> run_benchmark(const std::vector<BenchmarkCell>& cells,
                                           const BenchmarkData& data, const Denoiser& denoiser,
                                           const SkeletonTopology& topo, int threads) {
  if (cells.empty()) fail(Errc::config, "benchmark: empty grid");
  check_data(data);
  for (const auto& c : cells) c.config.validate();
  const std::size_t N = data.truth.size();

  std::vector<BenchmarkReport> reports(cells.size());
  std::vector<double> seconds(cells.size() * N, 0.0);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    reports[c].group = cells[c].group;
    reports[c].label = cells[c].label;
    reports[c].config = cells[c].config;
    reports[c].mpjpe_none.assign(N, 0.0);
    reports[c].mpjpe_root.assign(N, 0.0);
    reports[c].mpjpe_procrustes.assign(N, 0.0);
    reports[c].bone_var.assign(N, 0.0);
  }

  parallel_for(cells.size() * N, resolve_threads(threads), [&](std::size_t job) {
    const std::size_t c = job / N;
    const std::size_t n = job % N;
    CmasConfig cfg = cells[c].config;
    cfg.seed = sequence_seed(cells[c].config.seed, n);
    cfg.threads = 1;
    const auto t0 = std::chrono::steady_clock::now();
    const LiftResult r = lift(data.inputs[n], denoiser, cfg, topo);
    seconds[job] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto& rep = reports[c];
    rep.mpjpe_none[n] = mpjpe(r.pose, data.truth[n], Alignment::none, topo.root());
    rep.mpjpe_root[n] = mpjpe(r.pose, data.truth[n], Alignment::root, topo.root());
    rep.mpjpe_procrustes[n] = mpjpe(r.pose, data.truth[n], Alignment::procrustes, topo.root());
    rep.bone_var[n] = bone_variance_loss(r.pose, topo);
  });

  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t n = 0; n < N; ++n) reports[c].runtime_s += seconds[c * N + n];
  }
  std::stable_sort(reports.begin(), reports.end(),
                   [](const auto& a, const auto& b) { return report_key(a) < report_key(b); });
  return reports;
}

BenchmarkReport baseline_report(const BenchmarkData& data, const CmasConfig& config,
                                const SkeletonTopology& topo) {
  check_data(data);
  BenchmarkReport rep;
  rep.group = "baseline";
  rep.label = "constant_depth";
  rep.config = config;
  const CameraRig rig = rig_for(config);
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t n = 0; n < data.truth.size(); ++n) {
    const Pose3DSequence X = baseline_lift(data.inputs[n], rig.reference(), config.rig.distance);
    rep.mpjpe_none.push_back(mpjpe(X, data.truth[n], Alignment::none, topo.root()));
    rep.mpjpe_root.push_back(mpjpe(X, data.truth[n], Alignment::root, topo.root()));
    rep.mpjpe_procrustes.push_back(mpjpe(X, data.truth[n], Alignment::procrustes, topo.root()));
    rep.bone_var.push_back(bone_variance_loss(X, topo));
  }
  rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) fail(Errc::config, "grid: empty list");
  return out;
}

double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    fail(Errc::config, "grid: cannot parse '" + s + "'");
  }
  if (used != s.size()) fail(Errc::config, "grid: cannot parse '" + s + "'");
  return v;
}

}  // namespace

std::vector<int> parse_view_grid(const std::string& text) {
  std::vector<int> out;
  for (const auto& s : split_list(text)) {
    const double v = parse_number(s);
    if (v < 1 || v != std::floor(v)) fail(Errc::config, "grid: view count '" + s + "' is not a positive integer");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::vector<WeightValue> parse_weight_grid(const std::string& text) {
  std::vector<WeightValue> out;
  for (const auto& s : split_list(text)) {
    const auto slash = s.find('/');
    double v = 0.0;
    if (slash == std::string::npos) {
      v = parse_number(s);
    } else {
      const double den = parse_number(s.substr(slash + 1));
      if (den == 0.0) fail(Errc::config, "grid: zero denominator in '" + s + "'");
      v = parse_number(s.substr(0, slash)) / den;
    }
    if (!(v > 0.0 && v <= 1.0)) fail(Errc::config, "grid: weight '" + s + "' outside (0, 1]");
    out.push_back({v, s});
  }
  return out;
}

std::vector<BenchmarkCell> ablation_cells(const CmasConfig& base, const AblationGrid& grid) {
  std::vector<BenchmarkCell> cells;
  for (int V : grid.views) {
    CmasConfig c = base;
    c.views = V;
    if (V == 1) c.w_ref = 1.0;
    cells.push_back({"views", "V=" + std::to_string(V), c});
  }
  if (grid.components) {
    CmasConfig unweighted = base;
    unweighted.w_ref = 1.0 / base.views;
    unweighted.lambda_bone = 0.0;
    CmasConfig weighted = base;
    weighted.lambda_bone = 0.0;
    cells.push_back({"components", "unweighted", unweighted});
    cells.push_back({"components", "weighted", weighted});
    cells.push_back({"components", "weighted+bone", base});
  }
  for (const auto& w : grid.weights) {
    CmasConfig c = base;
    c.w_ref = w.value;
    cells.push_back({"weights", "w_ref=" + w.text, c});
  }
  if (cells.empty()) fail(Errc::config, "ablation: empty grid");
  return cells;
}

std::vector<BenchmarkReport> run_ablation(const CmasConfig& base, const AblationGrid& grid,
                                          const BenchmarkData& data, const Denoiser& denoiser,
                                          const SkeletonTopology& topo, int threads) {
  return run_benchmark(ablation_cells(base, grid), data, denoiser, topo, threads);
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string reports_to_csv(const std::vector<BenchmarkReport>& reports) {
  std::string out =
      "group,label,views,steps,w_ref,lambda_bone,lr,iters,seed,sequences,"
      "mpjpe_none,mpjpe_root,mpjpe_procrustes,median_root,bone_var,runtime_s\n";
  for (const auto& r : reports) {
    const auto& c = r.config;
    out += r.group + "," + r.label + "," + std::to_string(c.views) + "," + std::to_string(c.steps) +
           "," + fmt_double(c.w_ref) + "," + fmt_double(c.lambda_bone) + "," +
           fmt_double(c.optimizer.learning_rate) + "," + std::to_string(c.optimizer.iterations) + "," +
           std::to_string(c.seed) + "," + std::to_string(r.sequences()) + "," +
           fmt_double(mean_of(r.mpjpe_none)) + "," + fmt_double(mean_of(r.mpjpe_root)) + "," +
           fmt_double(mean_of(r.mpjpe_procrustes)) + "," + fmt_double(median_of(r.mpjpe_root)) + "," +
           fmt_double(mean_of(r.bone_var)) + "," + fmt_double(r.runtime_s) + "\n";
  }
  return out;
}

std::string reports_to_json(const std::vector<BenchmarkReport>& reports) {
  auto arr = nlohmann::json::array();
  for (const auto& r : reports) {
    const auto& c = r.config;
    nlohmann::json j;
    j["group"] = r.group;
    j["label"] = r.label;
    j["config"] = {{"views", c.views},
                   {"steps", c.steps},
                   {"w_ref", c.w_ref},
                   {"lambda_bone", c.lambda_bone},
                   {"lr", c.optimizer.learning_rate},
                   {"iters", c.optimizer.iterations},
                   {"seed", c.seed},
                   {"distance", c.rig.distance},
                   {"elevation", c.rig.elevation}};
    j["sequences"] = r.sequences();
    j["mpjpe_none"] = mean_of(r.mpjpe_none);
    j["mpjpe_root"] = mean_of(r.mpjpe_root);
    j["mpjpe_procrustes"] = mean_of(r.mpjpe_procrustes);
    j["median_root"] = median_of(r.mpjpe_root);
    j["bone_var"] = mean_of(r.bone_var);
    j["runtime_s"] = r.runtime_s;
    j["per_sequence_root"] = r.mpjpe_root;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace cmas
