#include "cmas/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cmas/error.hpp"

namespace cmas {

NoiseSchedule::NoiseSchedule(std::vector<double> beta) {
  if (beta.empty()) fail(Errc::domain, "noise schedule: needs at least one step");
  beta_.reserve(beta.size() + 1);
  beta_.push_back(0.0);
  alpha_bar_.reserve(beta.size() + 1);
  alpha_bar_.push_back(1.0);
  for (double b : beta) {
    if (!(b > 0.0 && b < 1.0)) fail(Errc::domain, "noise schedule: beta outside (0,1)");
    beta_.push_back(b);
    alpha_bar_.push_back(alpha_bar_.back() * (1.0 - b));
  }
}

void NoiseSchedule::check_step(int t) const {
  if (t < 1 || t > steps()) {
    fail(Errc::domain, "diffusion step " + std::to_string(t) + " outside [1, " +
                           std::to_string(steps()) + "]");
  }
}

NoiseSchedule cosine_schedule(int steps) {
  if (steps < 1) fail(Errc::domain, "cosine_schedule: T must be positive");
  const auto f = [steps](int t) {
    const double c = std::cos((static_cast<double>(t) / steps + kCosineOffset) /
                              (1.0 + kCosineOffset) * std::numbers::pi / 2.0);
    return c * c;
  };
  const double f0 = f(0);
  std::vector<double> beta(steps);
  double prev = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double ab = f(t) / f0;
    beta[t - 1] = std::min(1.0 - ab / prev, kMaxBeta);
    prev = ab;
  }
  return NoiseSchedule(std::move(beta));
}

std::vector<double> forward_sample(std::span<const double> x0, int t,
                                   std::span<const double> eps,
                                   const NoiseSchedule& schedule) {
  schedule.check_step(t);
  if (x0.size() != eps.size()) fail(Errc::shape, "forward_sample: x0/eps size mismatch");
  const double a = std::sqrt(schedule.alpha_bar(t));
  const double s = std::sqrt(1.0 - schedule.alpha_bar(t));
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + s * eps[i];
  return out;
}

PosteriorCoefficients posterior_coefficients(int t, const NoiseSchedule& schedule) {
  schedule.check_step(t);
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t - 1);
  const double beta = schedule.beta(t);
  PosteriorCoefficients c;
  c.clean = std::sqrt(ab_prev) * beta / (1.0 - ab);
  c.noisy = std::sqrt(schedule.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
  c.variance = (1.0 - ab_prev) / (1.0 - ab) * beta;
  return c;
}

std::vector<double> posterior_sample(std::span<const double> x_t,
                                     std::span<const double> x0_hat, int t,
                                     const NoiseSchedule& schedule,
                                     std::span<const double> noise) {
  const PosteriorCoefficients c = posterior_coefficients(t, schedule);
  if (x_t.size() != x0_hat.size() || noise.size() != x_t.size()) {
    fail(Errc::shape, "posterior_sample: tensor size mismatch");
  }
  const double sd = std::sqrt(c.variance);
  std::vector<double> out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    out[i] = c.clean * x0_hat[i] + c.noisy * x_t[i] + sd * noise[i];
  }
  return out;
}

std::vector<double> posterior_sample(std::span<const double> x_t,
                                     std::span<const double> x0_hat, int t,
                                     const NoiseSchedule& schedule,
                                     RngStream& rng) {
  schedule.check_step(t);
  const std::vector<double> noise = rng.normal_vector(x_t.size());
  return posterior_sample(x_t, x0_hat, t, schedule, noise);
}

}  // namespace cmas
