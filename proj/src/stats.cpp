#include "ganduf/stats.hpp"

#include <algorithm>
#include <cmath>

#include "ganduf/error.hpp"

namespace ganduf::stats {

QuantileEstimate estimate_quantile(std::span<const double> values, double tau) {
  if (values.empty()) throw ContractError("quantile of an empty sample");
  if (!(tau > 0.0 && tau < 1.0)) throw ContractError("quantile level must lie in (0, 1)");
  QuantileEstimate q;
  q.tau = tau;
  q.n_samples = values.size();
  q.samples.assign(values.begin(), values.end());
  std::sort(q.samples.begin(), q.samples.end());
  const double n = static_cast<double>(values.size());
  const auto k = static_cast<std::ptrdiff_t>(std::ceil(tau * n)) - 1;
  q.value = q.samples[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(n) - 1))];
  return q;
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ContractError("Wasserstein distance of an empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  // Sweep the merged support; between consecutive breakpoints both CDFs are
  // constant. Counts are kept as integers so the CDF values are exact ratios.
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double prev = std::min(x.front(), y.front());
  double total = 0.0;
  while (i < x.size() || j < y.size()) {
    const double next = (j == y.size() || (i < x.size() && x[i] <= y[j])) ? x[i] : y[j];
    const double diff = std::abs(static_cast<double>(i) * nb - static_cast<double>(j) * na) / (na * nb);
    total += diff * (next - prev);
    prev = next;
    while (i < x.size() && x[i] == next) ++i;
    while (j < y.size() && y[j] == next) ++j;
  }
  return total;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ContractError("mean of an empty sample");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size() - 1));
}

}  // namespace ganduf::stats
