#pragma once

#include <span>
#include <vector>

#include "cmas/rng.hpp"

namespace cmas {

/// DDPM noise schedule. Steps are 1..T; index 0 holds alpha_bar = 1 so the
/// posterior formulas need no special case at t = 1.
class NoiseSchedule {
 public:
  NoiseSchedule(std::vector<double> beta);  // beta_1..beta_T

  int steps() const { return static_cast<int>(beta_.size()) - 1; }
  double beta(int t) const { return beta_.at(t); }
  double alpha(int t) const { return 1.0 - beta_.at(t); }
  double alpha_bar(int t) const { return alpha_bar_.at(t); }

  /// Throws Errc::domain unless 1 <= t <= T.
  void check_step(int t) const;

 private:
  std::vector<double> beta_;       // [0] unused (0)
  std::vector<double> alpha_bar_;  // [0] = 1
};

constexpr double kCosineOffset = 0.008;
constexpr double kMaxBeta = 0.999;

/// alpha_bar(t) = f(t)/f(0), f(t) = cos^2(((t/T + s)/(1 + s)) pi/2), with
/// beta clipped to 0.999 and alpha_bar rebuilt as the product of alphas.
NoiseSchedule cosine_schedule(int steps);

/// sqrt(ab_t) x0 + sqrt(1 - ab_t) eps.
std::vector<double> forward_sample(std::span<const double> x0, int t,
                                   std::span<const double> eps,
                                   const NoiseSchedule& schedule);

struct PosteriorCoefficients {
  double clean = 0.0;  // multiplies x0_hat
  double noisy = 0.0;  // multiplies x_t
  double variance = 0.0;
};

PosteriorCoefficients posterior_coefficients(int t, const NoiseSchedule& schedule);

/// Draw from q(x_{t-1} | x_t, x0 = x0_hat).
std::vector<double> posterior_sample(std::span<const double> x_t,
                                     std::span<const double> x0_hat, int t,
                                     const NoiseSchedule& schedule,
                                     RngStream& rng);

/// Same, with caller-supplied standard-normal noise.
std::vector<double> posterior_sample(std::span<const double> x_t,
                                     std::span<const double> x0_hat, int t,
                                     const NoiseSchedule& schedule,
                                     std::span<const double> noise);

/// Clean-motion predictor x0_hat = D(x_t, t) over flattened L x J x 2
/// tensors. Implementations must be deterministic and safe to call from
/// several threads once constructed.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual std::vector<double> predict_clean(std::span<const double> x_t,
                                            int t, int view) const = 0;
  virtual int frames() const = 0;
  virtual int joints() const = 0;
};

}  // namespace cmas
