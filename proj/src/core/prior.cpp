#include "cmas/prior.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "cmas/error.hpp"

namespace cmas {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void check_dataset(std::span<const Pose2DSequence> dataset) {
  const auto& first = dataset.front();
  for (const auto& s : dataset) {
    if (s.frames != first.frames || s.joints != first.joints ||
        s.coords.size() != first.coords.size()) {
      fail(Errc::shape, "dataset sequences have heterogeneous shapes");
    }
  }
}

// D x N matrix of flattened sequences.
Eigen::MatrixXd stack(std::span<const Pose2DSequence> dataset) {
  const auto D = static_cast<Eigen::Index>(dataset.front().coords.size());
  Eigen::MatrixXd m(D, static_cast<Eigen::Index>(dataset.size()));
  for (std::size_t n = 0; n < dataset.size(); ++n) {
    m.col(static_cast<Eigen::Index>(n)) = as_vector(dataset[n].coords);
  }
  return m;
}

std::vector<double> flatten(const Eigen::MatrixXd& m) {
  // row-major
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

Eigen::MatrixXd unflatten(const std::vector<double>& v, Eigen::Index rows,
                          Eigen::Index cols) {
  if (static_cast<Eigen::Index>(v.size()) != rows * cols) {
    fail(Errc::config, "model file: matrix has wrong number of entries");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  return m;
}

}  // namespace

GaussianMotionPrior::GaussianMotionPrior(int frames, int joints,
                                         Eigen::VectorXd mean,
                                         Eigen::MatrixXd covariance)
    : frames_(frames), joints_(joints), mean_(std::move(mean)),
      cov_(std::move(covariance)) {
  const Eigen::Index D = static_cast<Eigen::Index>(frames) * joints * 2;
  if (frames <= 0 || joints <= 0 || mean_.size() != D || cov_.rows() != D ||
      cov_.cols() != D) {
    fail(Errc::shape, "gaussian prior: mean/covariance do not match L x J x 2");
  }
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    fail(Errc::numerical, "gaussian prior: covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
  if (eig.info() != Eigen::Success) {
    fail(Errc::numerical, "gaussian prior: eigendecomposition failed");
  }
  if (eig.eigenvalues().minCoeff() < -1e-9 * scale) {
    fail(Errc::numerical, "gaussian prior: covariance is not positive semidefinite");
  }
  eigval_ = eig.eigenvalues().cwiseMax(0.0);
  eigvec_ = eig.eigenvectors();
}

std::vector<double> GaussianMotionPrior::denoise(std::span<const double> x_t, int t,
                                                 const NoiseSchedule& schedule) const {
  schedule.check_step(t);
  if (static_cast<Eigen::Index>(x_t.size()) != mean_.size()) {
    fail(Errc::shape, "analytic_denoise: input does not match prior shape");
  }
  const double ab = schedule.alpha_bar(t);
  const double sab = std::sqrt(ab);
  // S (ab S + (1-ab) I)^-1 = U diag(l / (ab l + 1 - ab)) U^T
  const Eigen::VectorXd gain =
      eigval_.array() * sab / (ab * eigval_.array() + (1.0 - ab));
  const Eigen::VectorXd centered = as_vector(x_t) - sab * mean_;
  const Eigen::VectorXd coeffs = eigvec_.transpose() * centered;
  const Eigen::VectorXd out = mean_ + eigvec_ * gain.cwiseProduct(coeffs);
  if (!out.allFinite()) fail(Errc::numerical, "analytic_denoise: non-finite result");
  return to_std(out);
}

double GaussianMotionPrior::bayes_mse(int t, const NoiseSchedule& schedule) const {
  schedule.check_step(t);
  const double ab = schedule.alpha_bar(t);
  return (eigval_.array() * (1.0 - ab) / (ab * eigval_.array() + (1.0 - ab))).sum();
}

GaussianMotionPrior fit_gaussian_prior(std::span<const Pose2DSequence> dataset) {
  if (dataset.size() < 2) fail(Errc::domain, "fit_gaussian_prior: need at least 2 sequences");
  check_dataset(dataset);
  const Eigen::MatrixXd X = stack(dataset);
  const double n = static_cast<double>(X.cols());
  const Eigen::VectorXd mean = X.rowwise().sum() / n;
  const Eigen::MatrixXd centered = X.colwise() - mean;
  Eigen::MatrixXd cov = (centered * centered.transpose()) / n;
  cov = 0.5 * (cov + cov.transpose());
  const double D = static_cast<double>(cov.rows());
  double jitter = 1e-6 * cov.trace() / D;
  // Zero-variance data still needs a strictly positive floor.
  if (!(jitter > 0.0)) jitter = 1e-12;
  cov.diagonal().array() += jitter;
  return GaussianMotionPrior(dataset.front().frames, dataset.front().joints, mean,
                             std::move(cov));
}

std::vector<double> analytic_denoise(const GaussianMotionPrior& prior,
                                     std::span<const double> x_t, int t,
                                     const NoiseSchedule& schedule) {
  return prior.denoise(x_t, t, schedule);
}

RegressionDenoiser::RegressionDenoiser(int frames, int joints,
                                       Eigen::MatrixXd basis,
                                       std::vector<StepMap> maps)
    : frames_(frames), joints_(joints), basis_(std::move(basis)),
      maps_(std::move(maps)) {
  const Eigen::Index D = static_cast<Eigen::Index>(frames) * joints * 2;
  if (frames <= 0 || joints <= 0 || basis_.rows() != D || basis_.cols() < 1 ||
      basis_.cols() > D) {
    fail(Errc::shape, "regression denoiser: basis does not match L x J x 2");
  }
  if (maps_.empty()) fail(Errc::domain, "regression denoiser: needs one map per step");
  for (const auto& m : maps_) {
    if (m.coeff.rows() != basis_.cols() || m.coeff.cols() != basis_.cols() ||
        m.bias.size() != D) {
      fail(Errc::shape, "regression denoiser: step map has wrong shape");
    }
  }
}

const RegressionDenoiser::StepMap& RegressionDenoiser::map(int t) const {
  if (t < 1 || t > steps()) {
    fail(Errc::domain, "regression denoiser: step " + std::to_string(t) +
                           " outside [1, " + std::to_string(steps()) + "]");
  }
  return maps_[static_cast<std::size_t>(t - 1)];
}

Eigen::MatrixXd RegressionDenoiser::linear_part(int t) const {
  return basis_ * map(t).coeff * basis_.transpose();
}

std::vector<double> RegressionDenoiser::denoise(std::span<const double> x_t, int t) const {
  const StepMap& m = map(t);
  if (static_cast<Eigen::Index>(x_t.size()) != basis_.rows()) {
    fail(Errc::shape, "regression_denoise: input does not match model shape");
  }
  const Eigen::VectorXd z = basis_.transpose() * as_vector(x_t);
  const Eigen::VectorXd out = m.bias + basis_ * (m.coeff * z);
  return to_std(out);
}

RegressionDenoiser fit_regression_denoiser(std::span<const Pose2DSequence> dataset,
                                           const NoiseSchedule& schedule,
                                           const RegressionFitOptions& options,
                                           RngStream& rng) {
  if (dataset.empty()) fail(Errc::domain, "fit_regression_denoiser: empty dataset");
  if (options.samples_per_t < 1) fail(Errc::domain, "fit_regression_denoiser: samples_per_t must be positive");
  check_dataset(dataset);
  const Eigen::MatrixXd X = stack(dataset);
  const Eigen::Index D = X.rows();
  const double n_data = static_cast<double>(X.cols());
  const Eigen::VectorXd data_mean = X.rowwise().sum() / n_data;

  // Principal directions of the data, largest variance first.
  const Eigen::MatrixXd centered = X.colwise() - data_mean;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered * centered.transpose() / n_data);
  if (eig.info() != Eigen::Success) fail(Errc::numerical, "fit_regression_denoiser: PCA failed");
  const Eigen::Index k = std::min<Eigen::Index>(D, std::max(1, options.max_rank));
  const Eigen::MatrixXd basis = eig.eigenvectors().rightCols(k).rowwise().reverse();

  const int n = options.samples_per_t;
  std::vector<RegressionDenoiser::StepMap> maps;
  maps.reserve(static_cast<std::size_t>(schedule.steps()));
  Eigen::MatrixXd clean(D, n), noisy(D, n);
  for (int t = 1; t <= schedule.steps(); ++t) {
    const double a = std::sqrt(schedule.alpha_bar(t));
    const double s = std::sqrt(1.0 - schedule.alpha_bar(t));
    for (int i = 0; i < n; ++i) {
      const Eigen::Index idx = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(X.cols()));
      clean.col(i) = X.col(idx);
      for (Eigen::Index d = 0; d < D; ++d) noisy(d, i) = a * X(d, idx) + s * rng.normal();
    }
    const Eigen::MatrixXd Z = basis.transpose() * noisy;  // k x n
    const Eigen::VectorXd z_mean = Z.rowwise().sum() / n;
    const Eigen::VectorXd y_mean = clean.rowwise().sum() / n;
    const Eigen::MatrixXd Zc = Z.colwise() - z_mean;
    const Eigen::MatrixXd Yc = basis.transpose() * (clean.colwise() - y_mean);  // k x n
    Eigen::MatrixXd gram = Zc * Zc.transpose() / n;
    gram.diagonal().array() += options.ridge;
    const Eigen::MatrixXd cross = Yc * Zc.transpose() / n;
    // C gram = cross  =>  gram^T C^T = cross^T
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) fail(Errc::numerical, "fit_regression_denoiser: ridge solve failed");
    RegressionDenoiser::StepMap m;
    m.coeff = ldlt.solve(cross.transpose()).transpose();
    m.bias = y_mean - basis * (m.coeff * z_mean);
    if (!m.coeff.allFinite() || !m.bias.allFinite()) {
      fail(Errc::numerical, "fit_regression_denoiser: non-finite fit at step " + std::to_string(t));
    }
    maps.push_back(std::move(m));
  }
  return RegressionDenoiser(dataset.front().frames, dataset.front().joints, basis,
                            std::move(maps));
}

std::vector<double> regression_denoise(const RegressionDenoiser& model,
                                       std::span<const double> x_t, int t) {
  return model.denoise(x_t, t);
}

double denoiser_mse(const Denoiser& denoiser, std::span<const Pose2DSequence> dataset,
                    int t, const NoiseSchedule& schedule, int samples, RngStream& rng) {
  if (dataset.empty() || samples < 1) fail(Errc::domain, "denoiser_mse: nothing to evaluate");
  double total = 0.0;
  for (int i = 0; i < samples; ++i) {
    const auto& x0 = dataset[rng.next_u64() % dataset.size()].coords;
    const std::vector<double> eps = rng.normal_vector(x0.size());
    const auto x_t = forward_sample(x0, t, eps, schedule);
    const auto pred = denoiser.predict_clean(x_t, t, 0);
    for (std::size_t d = 0; d < x0.size(); ++d) total += (pred[d] - x0[d]) * (pred[d] - x0[d]);
  }
  return total / samples;
}

std::vector<double> GaussianDenoiser::predict_clean(std::span<const double> x_t, int t,
                                                    int /*view*/) const {
  return prior_->denoise(x_t, t, schedule_);
}

std::vector<double> LinearRegressionDenoiser::predict_clean(std::span<const double> x_t,
                                                            int t, int /*view*/) const {
  return model_->denoise(x_t, t);
}

nlohmann::json prior_to_json(const GaussianMotionPrior& prior, int steps) {
  nlohmann::json j;
  j["version"] = kModelVersion;
  j["kind"] = "gaussian";
  j["frames"] = prior.frames();
  j["joints"] = prior.joints();
  j["steps"] = steps;
  j["mean"] = to_std(prior.mean());
  j["covariance"] = flatten(prior.covariance());
  return j;
}

nlohmann::json regression_to_json(const RegressionDenoiser& model) {
  nlohmann::json j;
  j["version"] = kModelVersion;
  j["kind"] = "regression";
  j["frames"] = model.frames();
  j["joints"] = model.joints();
  j["steps"] = model.steps();
  j["rank"] = model.rank();
  j["basis"] = flatten(model.basis());
  auto maps = nlohmann::json::array();
  for (int t = 1; t <= model.steps(); ++t) {
    maps.push_back({{"t", t}, {"C", flatten(model.map(t).coeff)}, {"b", to_std(model.map(t).bias)}});
  }
  j["maps"] = maps;
  return j;
}

LoadedModel model_from_json(const nlohmann::json& j) {
  LoadedModel out;
  try {
    if (j.at("version").get<std::string>() != kModelVersion) {
      fail(Errc::config, "model file: unsupported version " + j.at("version").dump());
    }
    out.kind = j.at("kind").get<std::string>();
    out.steps = j.at("steps").get<int>();
    const int frames = j.at("frames").get<int>();
    const int joints = j.at("joints").get<int>();
    if (frames <= 0 || joints <= 0 || out.steps <= 0) fail(Errc::config, "model file: bad shape metadata");
    const Eigen::Index D = static_cast<Eigen::Index>(frames) * joints * 2;
    if (out.kind == "gaussian") {
      const auto mean = j.at("mean").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(mean.size()) != D) fail(Errc::config, "model file: mean has wrong size");
      out.gaussian = std::make_shared<const GaussianMotionPrior>(
          frames, joints, Eigen::Map<const Eigen::VectorXd>(mean.data(), D),
          unflatten(j.at("covariance").get<std::vector<double>>(), D, D));
    } else if (out.kind == "regression") {
      const Eigen::Index k = j.at("rank").get<int>();
      Eigen::MatrixXd basis = unflatten(j.at("basis").get<std::vector<double>>(), D, k);
      std::vector<RegressionDenoiser::StepMap> maps;
      for (const auto& m : j.at("maps")) {
        const auto b = m.at("b").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(b.size()) != D) fail(Errc::config, "model file: bias has wrong size");
        maps.push_back({unflatten(m.at("C").get<std::vector<double>>(), k, k),
                        Eigen::Map<const Eigen::VectorXd>(b.data(), D)});
      }
      if (static_cast<int>(maps.size()) != out.steps) fail(Errc::config, "model file: expected one map per step");
      out.regression = std::make_shared<const RegressionDenoiser>(frames, joints, std::move(basis),
                                                                  std::move(maps));
    } else {
      fail(Errc::config, "model file: unknown kind '" + out.kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, std::string("model file: ") + e.what());
  }
  return out;
}

std::unique_ptr<Denoiser> LoadedModel::make_denoiser(int sampler_steps) const {
  if (gaussian) {
    return std::make_unique<GaussianDenoiser>(gaussian, cosine_schedule(sampler_steps));
  }
  if (regression) {
    if (regression->steps() != sampler_steps) {
      fail(Errc::config, "regression model was fitted for T=" + std::to_string(regression->steps()) +
                             ", sampler uses T=" + std::to_string(sampler_steps));
    }
    return std::make_unique<LinearRegressionDenoiser>(regression);
  }
  fail(Errc::config, "empty model");
}

void save_model_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::io, "cannot write model file " + path);
  os << j.dump() << '\n';
  if (!os) fail(Errc::io, "failed writing model file " + path);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::io, "cannot open model file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, "model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace cmas
