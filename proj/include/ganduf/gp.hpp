#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ganduf/rng.hpp"

namespace ganduf::gp {

/// Squared-exponential ARD kernel hyperparameters, on the standardized
/// target scale: k(a, b) = signal_var * exp(-0.5 sum_j (a_j - b_j)^2 / l_j^2).
struct Hyperparameters {
  double signal_var = 1.0;
  std::vector<double> length_scales;
  double noise_var = 1e-6;
};

struct FitConfig {
  /// Random starts in addition to the warm start.
  std::size_t restarts = 4;
  std::size_t max_iterations = 60;
  /// When set, the noise variance is held at this value instead of fitted.
  std::optional<double> fixed_noise;
  double min_length = 1e-2, max_length = 10.0;
  double min_signal = 1e-2, max_signal = 1e2;
  double min_noise = 1e-8, max_noise = 1.0;
};

struct Prediction {
  double mean = 0.0;
  double std = 0.0;
};

struct PredictionGradient {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> d_mean;
  std::vector<double> d_std;
};

/// Exact GP regression with a zero-mean prior on standardized targets.
/// Predictions are returned on the original scale; `std` is the latent
/// function's posterior standard deviation (no observation noise).
class GaussianProcess {
 public:
  /// Conditions on (x, y) with the given hyperparameters. Throws
  /// SurrogateError when the kernel matrix cannot be factorised even after
  /// adding jitter up to 1e-4.
  void condition(std::vector<std::vector<double>> x, std::vector<double> y, Hyperparameters hyper);

  /// Maximises the log marginal likelihood from the warm start (if any) and
  /// `cfg.restarts` random starts, then conditions on the best.
  void fit(std::vector<std::vector<double>> x, std::vector<double> y, const FitConfig& cfg, Rng& rng,
           const std::optional<Hyperparameters>& warm_start = std::nullopt);

  Prediction predict(const std::vector<double>& query) const;
  PredictionGradient predict_with_gradient(const std::vector<double>& query) const;

  /// On the standardized scale, for the current hyperparameters.
  double log_marginal_likelihood() const { return lml_; }
  const Hyperparameters& hyperparameters() const { return hyper_; }
  double jitter() const { return jitter_; }
  std::size_t size() const { return y_.size(); }
  double prior_mean() const { return y_mean_; }
  /// Prior standard deviation on the original scale.
  double prior_std() const;

 private:
  std::vector<std::vector<double>> x_;
  std::vector<double> y_;
  double y_mean_ = 0.0, y_scale_ = 1.0;
  Hyperparameters hyper_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
  double lml_ = 0.0;
};

/// Log marginal likelihood and its gradient with respect to
/// (log signal_var, log l_1..d, log noise_var) for standardized targets.
/// Returns nullopt when the kernel cannot be factorised.
struct LmlValue {
  double value = 0.0;
  std::vector<double> gradient;
};
std::optional<LmlValue> log_marginal_likelihood(const std::vector<std::vector<double>>& x, const Eigen::VectorXd& y,
                                                const Hyperparameters& hyper);

// ---------------------------------------------------------------------------

/// Expected improvement for maximisation; std = 0 gives max(mean - best, 0).
double expected_improvement(double mean, double std, double best);

struct EiGradient {
  double value = 0.0;
  double d_mean = 0.0;
  double d_std = 0.0;
};
EiGradient expected_improvement_gradient(double mean, double std, double best);

/// Latin hypercube sample: coordinate j of point i is (perm_j(i) + u) / n.
std::vector<std::vector<double>> lhs(std::size_t n, std::size_t d, Rng& rng);

}  // namespace ganduf::gp
