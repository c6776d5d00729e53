#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ganduf::svg {

struct Series {
  std::string label;
  std::vector<double> x;  // ignored by histograms
  std::vector<double> y;
};

struct PlotText {
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// Overlaid translucent histograms of each series' y values on shared bins.
/// Non-finite values are dropped; a dashed line marks each series' tau-quantile
/// when tau is in (0, 1).
std::string histogram(const std::vector<Series>& series, const PlotText& text, std::size_t bins = 30,
                      double tau = 0.0);

/// Polylines through (x, y); an empty x means 0, 1, 2, ...
std::string line_plot(const std::vector<Series>& series, const PlotText& text);

void save(const std::string& svg, const std::filesystem::path& path);

}  // namespace ganduf::svg
