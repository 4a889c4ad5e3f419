#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace cmas {

/// Seeded Gaussian/uniform source. Copyable; copies continue the same stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  std::uint64_t next_u64() { return engine_(); }

  void fill_normal(std::vector<double>& out) {
    for (double& x : out) x = normal();
  }
  std::vector<double> normal_vector(std::size_t n) {
    std::vector<double> out(n);
    fill_normal(out);
    return out;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

/// Independent stream for (seed, step, view). Derivation is a splitmix64
/// hash chain, so the result does not depend on call order or thread.
RngStream rng_stream(std::uint64_t seed, std::uint64_t step, std::uint64_t view);

}  // namespace cmas
