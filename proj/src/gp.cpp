#include "ganduf/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ganduf/error.hpp"

namespace ganduf::gp {

namespace {

constexpr double kMaxJitter = 1e-4;

Eigen::MatrixXd kernel_matrix(const std::vector<std::vector<double>>& x, const Hyperparameters& h) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    k(a, a) = h.signal_var;
    for (Eigen::Index b = 0; b < a; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < h.length_scales.size(); ++j) {
        const double d = (x[static_cast<std::size_t>(a)][j] - x[static_cast<std::size_t>(b)][j]) / h.length_scales[j];
        s += d * d;
      }
      k(a, b) = k(b, a) = h.signal_var * std::exp(-0.5 * s);
    }
  }
  return k;
}

/// Cholesky of K + (noise + jitter) I, escalating jitter from zero.
bool factorise(const Eigen::MatrixXd& k, double noise, Eigen::LLT<Eigen::MatrixXd>& llt, double& jitter) {
  const auto n = k.rows();
  // Jitter ladder 0, 1e-12, 1e-11, ..., 1e-4.
  for (int step = 0; step <= 9; ++step) {
    const double j = step == 0 ? 0.0 : std::pow(10.0, step - 13);
    Eigen::MatrixXd m = k;
    m.diagonal().array() += noise + j;
    llt.compute(m);
    if (llt.info() == Eigen::Success) {
      // LLT can "succeed" on a numerically indefinite matrix; require a
      // strictly positive diagonal.
      if ((llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all() || n == 0) {
        jitter = j;
        return true;
      }
    }
  }
  return false;
}

std::vector<double> to_theta(const Hyperparameters& h) {
  std::vector<double> t{std::log(h.signal_var)};
  for (double l : h.length_scales) t.push_back(std::log(l));
  t.push_back(std::log(h.noise_var));
  return t;
}

Hyperparameters from_theta(const std::vector<double>& t) {
  Hyperparameters h;
  h.signal_var = std::exp(t.front());
  for (std::size_t j = 1; j + 1 < t.size(); ++j) h.length_scales.push_back(std::exp(t[j]));
  h.noise_var = std::exp(t.back());
  return h;
}

double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }
double normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

std::optional<LmlValue> log_marginal_likelihood(const std::vector<std::vector<double>>& x, const Eigen::VectorXd& y,
                                                const Hyperparameters& h) {
  const Eigen::MatrixXd kf = kernel_matrix(x, h);
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  if (!factorise(kf, h.noise_var, llt, jitter)) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::VectorXd alpha = llt.solve(y);
  const Eigen::MatrixXd l = llt.matrixL();
  LmlValue out;
  out.value = -0.5 * y.dot(alpha) - l.diagonal().array().log().sum() -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  const Eigen::MatrixXd w = alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(n, n));
  out.gradient.push_back(0.5 * (w.array() * kf.array()).sum());
  for (std::size_t j = 0; j < h.length_scales.size(); ++j) {
    double g = 0.0;
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) {
        const double d =
            (x[static_cast<std::size_t>(a)][j] - x[static_cast<std::size_t>(b)][j]) / h.length_scales[j];
        g += w(a, b) * kf(a, b) * d * d;
      }
    out.gradient.push_back(0.5 * g);
  }
  out.gradient.push_back(0.5 * h.noise_var * w.trace());
  return out;
}

void GaussianProcess::condition(std::vector<std::vector<double>> x, std::vector<double> y, Hyperparameters hyper) {
  if (x.empty() || x.size() != y.size()) throw ContractError("GP needs matching, non-empty inputs and targets");
  const std::size_t d = x.front().size();
  for (const auto& row : x) {
    if (row.size() != d) throw DimensionError("GP inputs have inconsistent dimensions");
  }
  if (hyper.length_scales.size() != d) throw DimensionError("GP length scales do not match the input dimension");
  const double n = static_cast<double>(y.size());
  double mean = 0.0;
  for (double v : y) mean += v / n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  const double scale = y.size() > 1 && ss > 0.0 ? std::sqrt(ss / (n - 1.0)) : 1.0;

  // Factorise before touching any state so a failure leaves the GP as it was.
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  if (!factorise(kernel_matrix(x, hyper), hyper.noise_var, llt, jitter)) {
    throw SurrogateError("GP kernel matrix is not positive definite even with jitter " + std::to_string(kMaxJitter));
  }
  x_ = std::move(x);
  y_ = std::move(y);
  hyper_ = std::move(hyper);
  y_mean_ = mean;
  y_scale_ = scale;
  llt_ = std::move(llt);
  jitter_ = jitter;
  Eigen::VectorXd ys(static_cast<Eigen::Index>(y_.size()));
  for (std::size_t i = 0; i < y_.size(); ++i) ys[static_cast<Eigen::Index>(i)] = (y_[i] - y_mean_) / y_scale_;
  alpha_ = llt_.solve(ys);
  const Eigen::MatrixXd l = llt_.matrixL();
  lml_ = -0.5 * ys.dot(alpha_) - l.diagonal().array().log().sum() - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

void GaussianProcess::fit(std::vector<std::vector<double>> x, std::vector<double> y, const FitConfig& cfg, Rng& rng,
                          const std::optional<Hyperparameters>& warm_start) {
  if (x.empty()) throw ContractError("GP fit needs at least one observation");
  const std::size_t d = x.front().size();
  // Standardize once here so the objective matches condition().
  Hyperparameters probe{1.0, std::vector<double>(d, 1.0), cfg.fixed_noise.value_or(1e-6)};
  condition(x, y, probe);
  Eigen::VectorXd ys(static_cast<Eigen::Index>(y_.size()));
  for (std::size_t i = 0; i < y_.size(); ++i) ys[static_cast<Eigen::Index>(i)] = (y_[i] - y_mean_) / y_scale_;

  std::vector<double> lo{std::log(cfg.min_signal)}, hi{std::log(cfg.max_signal)};
  for (std::size_t j = 0; j < d; ++j) {
    lo.push_back(std::log(cfg.min_length));
    hi.push_back(std::log(cfg.max_length));
  }
  if (cfg.fixed_noise) {
    lo.push_back(std::log(*cfg.fixed_noise));
    hi.push_back(std::log(*cfg.fixed_noise));
  } else {
    lo.push_back(std::log(cfg.min_noise));
    hi.push_back(std::log(cfg.max_noise));
  }
  auto project = [&](std::vector<double>& t) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::clamp(t[i], lo[i], hi[i]);
  };

  std::vector<std::vector<double>> starts;
  if (warm_start && warm_start->length_scales.size() == d) starts.push_back(to_theta(*warm_start));
  {
    Hyperparameters mid{1.0, std::vector<double>(d, 0.3), cfg.fixed_noise.value_or(1e-4)};
    starts.push_back(to_theta(mid));
  }
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    std::vector<double> t(lo.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo[i], hi[i]);
    starts.push_back(std::move(t));
  }

  std::optional<std::vector<double>> best_theta;
  double best_value = -std::numeric_limits<double>::infinity();
  for (auto theta : starts) {
    project(theta);
    auto cur = gp::log_marginal_likelihood(x, ys, from_theta(theta));
    if (!cur) continue;
    double step = 0.5;
    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
      bool accepted = false;
      for (int halving = 0; halving < 30; ++halving) {
        std::vector<double> cand = theta;
        for (std::size_t i = 0; i < cand.size(); ++i) cand[i] += step * cur->gradient[i];
        project(cand);
        double ascent = 0.0, moved = 0.0;
        for (std::size_t i = 0; i < cand.size(); ++i) {
          ascent += cur->gradient[i] * (cand[i] - theta[i]);
          moved = std::max(moved, std::abs(cand[i] - theta[i]));
        }
        if (moved < 1e-10) break;
        const auto next = gp::log_marginal_likelihood(x, ys, from_theta(cand));
        if (next && next->value >= cur->value + 1e-4 * ascent) {
          const double gain = next->value - cur->value;
          theta = std::move(cand);
          cur = next;
          step *= 2.0;
          accepted = gain > 1e-9;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
    }
    if (cur->value > best_value) {
      best_value = cur->value;
      best_theta = theta;
    }
  }
  if (!best_theta) throw SurrogateError("GP hyperparameter search found no factorisable kernel");
  condition(std::move(x), std::move(y), from_theta(*best_theta));
}

double GaussianProcess::prior_std() const { return y_scale_ * std::sqrt(hyper_.signal_var); }

Prediction GaussianProcess::predict(const std::vector<double>& q) const {
  const auto g = predict_with_gradient(q);
  return {g.mean, g.std};
}

PredictionGradient GaussianProcess::predict_with_gradient(const std::vector<double>& q) const {
  if (x_.empty()) throw ContractError("GP has no observations");
  const std::size_t d = hyper_.length_scales.size();
  if (q.size() != d) throw DimensionError("GP query has the wrong dimension");
  const auto n = static_cast<Eigen::Index>(x_.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double t = (q[j] - x_[static_cast<std::size_t>(i)][j]) / hyper_.length_scales[j];
      s += t * t;
    }
    k[i] = hyper_.signal_var * std::exp(-0.5 * s);
  }
  const Eigen::VectorXd beta = llt_.solve(k);
  PredictionGradient out;
  out.mean = y_mean_ + y_scale_ * k.dot(alpha_);
  const double var = std::max(hyper_.signal_var - k.dot(beta), 0.0);
  out.std = y_scale_ * std::sqrt(var);
  out.d_mean.assign(d, 0.0);
  out.d_std.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const double l2 = hyper_.length_scales[j] * hyper_.length_scales[j];
    double dm = 0.0, dv = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dk = -k[i] * (q[j] - x_[static_cast<std::size_t>(i)][j]) / l2;
      dm += alpha_[i] * dk;
      dv -= 2.0 * beta[i] * dk;
    }
    out.d_mean[j] = y_scale_ * dm;
    out.d_std[j] = var > 1e-300 ? y_scale_ * dv / (2.0 * std::sqrt(var)) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

double expected_improvement(double mean, double std, double best) {
  return expected_improvement_gradient(mean, std, best).value;
}

EiGradient expected_improvement_gradient(double mean, double std, double best) {
  if (std < 0.0) throw ContractError("expected improvement needs std >= 0");
  const double gap = mean - best;
  if (std == 0.0) return {std::max(gap, 0.0), gap > 0.0 ? 1.0 : 0.0, 0.0};
  const double u = gap / std;
  const double cdf = normal_cdf(u), pdf = normal_pdf(u);
  return {std::max(gap * cdf + std * pdf, 0.0), cdf, pdf};
}

std::vector<std::vector<double>> lhs(std::size_t n, std::size_t d, Rng& rng) {
  if (n < 1 || d < 1) throw ContractError("lhs needs n >= 1 and d >= 1");
  std::vector<std::vector<double>> pts(n, std::vector<double>(d));
  const double dn = static_cast<double>(n);
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    for (std::size_t i = 0; i < n; ++i) {
      const double k = static_cast<double>(perm[i]);
      double v = (k + rng.uniform()) / dn;
      // Keep rounding from pushing a point into the neighbouring stratum.
      while (v * dn >= k + 1.0 || v >= (k + 1.0) / dn) v = std::nextafter(v, 0.0);
      while (v * dn < k) v = std::nextafter(v, 1.0);
      pts[i][j] = v;
    }
  }
  return pts;
}

}  // namespace ganduf::gp
