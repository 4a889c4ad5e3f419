#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cmas/diffusion.hpp"
#include "cmas/tensor.hpp"

namespace cmas {

inline constexpr const char* kModelVersion = "cmas-prior/1";

/// N(mean, cov) over flattened L x J x 2 motions. The covariance is
/// eigendecomposed once at construction; every diffusion step reuses it.
class GaussianMotionPrior {
 public:
  GaussianMotionPrior(int frames, int joints, Eigen::VectorXd mean,
                      Eigen::MatrixXd covariance);

  int frames() const { return frames_; }
  int joints() const { return joints_; }
  int dim() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::VectorXd& eigenvalues() const { return eigval_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigvec_; }

  /// E[x0 | x_t] under the forward process.
  std::vector<double> denoise(std::span<const double> x_t, int t,
                              const NoiseSchedule& schedule) const;

  /// Expected squared error of the posterior mean at step t (trace of the
  /// posterior covariance).
  double bayes_mse(int t, const NoiseSchedule& schedule) const;

 private:
  int frames_;
  int joints_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::VectorXd eigval_;
  Eigen::MatrixXd eigvec_;
};

/// Empirical mean and covariance (divisor N) plus 1e-6 * trace / D on the
/// diagonal.
GaussianMotionPrior fit_gaussian_prior(std::span<const Pose2DSequence> dataset);

/// mu + sqrt(ab) S (ab S + (1 - ab) I)^-1 (x_t - sqrt(ab) mu).
std::vector<double> analytic_denoise(const GaussianMotionPrior& prior,
                                     std::span<const double> x_t, int t,
                                     const NoiseSchedule& schedule);

/// Per-step affine maps x0_hat = b_t + U C_t U^T x_t over a shared
/// orthonormal basis U (D x k). With k = D this is an unrestricted affine map.
class RegressionDenoiser {
 public:
  struct StepMap {
    Eigen::MatrixXd coeff;  // k x k
    Eigen::VectorXd bias;   // D
  };

  RegressionDenoiser(int frames, int joints, Eigen::MatrixXd basis,
                     std::vector<StepMap> maps);

  int frames() const { return frames_; }
  int joints() const { return joints_; }
  int steps() const { return static_cast<int>(maps_.size()); }
  int rank() const { return static_cast<int>(basis_.cols()); }
  const Eigen::MatrixXd& basis() const { return basis_; }
  const StepMap& map(int t) const;

  /// Dense D x D linear part for step t.
  Eigen::MatrixXd linear_part(int t) const;

  std::vector<double> denoise(std::span<const double> x_t, int t) const;

 private:
  int frames_;
  int joints_;
  Eigen::MatrixXd basis_;
  std::vector<StepMap> maps_;
};

struct RegressionFitOptions {
  int samples_per_t = 2000;
  double ridge = 1e-4;
  /// Upper bound on the basis rank k; k = min(D, max_rank).
  int max_rank = 96;
};

RegressionDenoiser fit_regression_denoiser(std::span<const Pose2DSequence> dataset,
                                           const NoiseSchedule& schedule,
                                           const RegressionFitOptions& options,
                                           RngStream& rng);

std::vector<double> regression_denoise(const RegressionDenoiser& model,
                                       std::span<const double> x_t, int t);

/// Mean squared error (summed over coordinates, averaged over draws) of
/// `denoiser` at step t on fresh forward samples of `dataset`.
double denoiser_mse(const Denoiser& denoiser,
                    std::span<const Pose2DSequence> dataset, int t,
                    const NoiseSchedule& schedule, int samples, RngStream& rng);

class GaussianDenoiser final : public Denoiser {
 public:
  GaussianDenoiser(std::shared_ptr<const GaussianMotionPrior> prior,
                   NoiseSchedule schedule)
      : prior_(std::move(prior)), schedule_(std::move(schedule)) {}

  std::vector<double> predict_clean(std::span<const double> x_t, int t,
                                    int view) const override;
  int frames() const override { return prior_->frames(); }
  int joints() const override { return prior_->joints(); }
  const GaussianMotionPrior& prior() const { return *prior_; }

 private:
  std::shared_ptr<const GaussianMotionPrior> prior_;
  NoiseSchedule schedule_;
};

class LinearRegressionDenoiser final : public Denoiser {
 public:
  explicit LinearRegressionDenoiser(std::shared_ptr<const RegressionDenoiser> model)
      : model_(std::move(model)) {}

  std::vector<double> predict_clean(std::span<const double> x_t, int t,
                                    int view) const override;
  int frames() const override { return model_->frames(); }
  int joints() const override { return model_->joints(); }
  const RegressionDenoiser& model() const { return *model_; }

 private:
  std::shared_ptr<const RegressionDenoiser> model_;
};

nlohmann::json prior_to_json(const GaussianMotionPrior& prior, int steps);
nlohmann::json regression_to_json(const RegressionDenoiser& model);

struct LoadedModel {
  std::string kind;  // "gaussian" | "regression"
  int steps = 0;
  std::shared_ptr<const GaussianMotionPrior> gaussian;
  std::shared_ptr<const RegressionDenoiser> regression;

  /// Denoiser for a sampler running `steps` diffusion steps. Gaussian priors
  /// work with any T; regression models only with the T they were fitted at.
  std::unique_ptr<Denoiser> make_denoiser(int steps) const;
};

LoadedModel model_from_json(const nlohmann::json& j);
void save_model_json(const nlohmann::json& j, const std::string& path);
LoadedModel load_model(const std::string& path);

}  // namespace cmas
