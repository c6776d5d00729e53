#pragma once

#include <span>
#include <vector>

namespace ganduf::stats {

struct QuantileEstimate {
  double tau = 0.05;
  double value = 0.0;
  std::size_t n_samples = 0;
  std::vector<double> samples;  // ascending
};

/// Lower empirical quantile: sorted[ceil(tau n) - 1], index clamped to
/// [0, n - 1]. Throws ContractError on empty input or tau outside (0, 1).
QuantileEstimate estimate_quantile(std::span<const double> values, double tau);

/// Wasserstein-1 distance between two empirical distributions with uniform
/// weights: the area between their step CDFs.
double wasserstein1(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator); 0 for a single value.
double stddev(std::span<const double> values);

}  // namespace ganduf::stats
