#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmas/eval.hpp"
#include "cmas/sampler.hpp"

namespace cmas {

/// Ground-truth motions with the reference-view inputs handed to the lifter.
struct BenchmarkData {
  std::vector<Pose3DSequence> truth;
  std::vector<Pose2DSequence> inputs;
};

/// Inputs are the view-0 projections plus N(0, noise_sigma^2) per coordinate.
BenchmarkData make_benchmark_data(const SyntheticDataset& dataset, double noise_sigma,
                                  std::uint64_t seed);

struct BenchmarkCell {
  std::string group;
  std::string label;
  CmasConfig config;
};

struct BenchmarkReport {
  std::string group;
  std::string label;
  CmasConfig config;
  std::vector<double> mpjpe_none;  // per sequence, mm
  std::vector<double> mpjpe_root;
  std::vector<double> mpjpe_procrustes;
  std::vector<double> bone_var;
  /// Summed lift time over sequences.
  double runtime_s = 0.0;

  int sequences() const { return static_cast<int>(mpjpe_root.size()); }
};

double mean_of(const std::vector<double>& v);
double median_of(std::vector<double> v);

/// Seed used for sequence n of every cell, so cells share their sampling noise.
std::uint64_t sequence_seed(std::uint64_t base, std::size_t n);

/// Runs every cell over every sequence; (cell, sequence) pairs are spread
/// over `threads` workers. Reports come back sorted by (group, views, w_ref,
/// lambda_bone).
std::vector<BenchmarkReport> run_benchmark(const std::vector<BenchmarkCell>& cells,
                                           const BenchmarkData& data, const Denoiser& denoiser,
                                           const SkeletonTopology& topo, int threads);

/// Constant-depth backprojection from the reference view, as a control row.
BenchmarkReport baseline_report(const BenchmarkData& data, const CmasConfig& config,
                                const SkeletonTopology& topo);

struct WeightValue {
  double value;
  std::string text;
};

struct AblationGrid {
  std::vector<int> views{3, 5, 7, 9};
  std::vector<WeightValue> weights{{1.0 / 7, "1/7"}, {1.0 / 4, "1/4"}, {1.0 / 3, "1/3"},
                                   {2.0 / 5, "2/5"}, {1.0 / 2, "1/2"}, {2.0 / 3, "2/3"},
                                   {3.0 / 4, "3/4"}, {4.0 / 5, "4/5"}, {9.0 / 10, "9/10"},
                                   {1.0, "1"}};
  /// unweighted (w_ref = 1/V, no bone term), weighted (no bone term), full.
  bool components = true;
};

std::vector<int> parse_view_grid(const std::string& text);
/// Comma-separated decimals or fractions such as "1/7,0.8,1".
std::vector<WeightValue> parse_weight_grid(const std::string& text);

std::vector<BenchmarkCell> ablation_cells(const CmasConfig& base, const AblationGrid& grid);

std::vector<BenchmarkReport> run_ablation(const CmasConfig& base, const AblationGrid& grid,
                                          const BenchmarkData& data, const Denoiser& denoiser,
                                          const SkeletonTopology& topo, int threads);

std::string reports_to_csv(const std::vector<BenchmarkReport>& reports);
std::string reports_to_json(const std::vector<BenchmarkReport>& reports);

}  // namespace cmas
