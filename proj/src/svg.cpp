#include "ganduf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ganduf/error.hpp"
#include "ganduf/stats.hpp"

namespace ganduf::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string colour(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof kPalette[0])]; }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double pad = std::abs(lo) > 0 ? 0.05 * std::abs(lo) : 0.5;
    lo -= pad;
    hi += pad;
  }
}

void open(std::ostringstream& os, const Frame& f, const PlotText& text) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(text.title)
     << "</text>\n";
  const double bx = kLeft, by = kHeight - kBottom;
  os << "<line x1=\"" << bx << "\" y1=\"" << by << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << by
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << bx << "\" y1=\"" << kTop << "\" x2=\"" << bx << "\" y2=\"" << by << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0, yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    os << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << by + 16 << "\" text-anchor=\"middle\">" << tick(xv)
       << "</text>\n"
       << "<text x=\"" << bx - 6 << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
       << "</text>\n";
  }
  os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
     << escape(text.x_label) << "</text>\n"
     << "<text transform=\"translate(16 " << kHeight / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(text.y_label) << "</text>\n";
}

void legend(std::ostringstream& os, const std::vector<Series>& series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 8 + 16.0 * static_cast<double>(i);
    os << "<rect x=\"" << kWidth - kRight - 150 << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
       << colour(i) << "\"/>\n"
       << "<text x=\"" << kWidth - kRight - 135 << "\" y=\"" << y << "\">" << escape(series[i].label) << "</text>\n";
  }
}

std::vector<double> finite(const std::vector<double>& v) {
  std::vector<double> out;
  std::copy_if(v.begin(), v.end(), std::back_inserter(out), [](double x) { return std::isfinite(x); });
  return out;
}

}  // namespace

std::string histogram(const std::vector<Series>& series, const PlotText& text, std::size_t bins, double tau) {
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  std::vector<std::vector<double>> values;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : series) {
    values.push_back(finite(s.y));
    for (double v : values.back()) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  widen(lo, hi);
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<std::vector<double>> density(series.size(), std::vector<double>(bins, 0.0));
  double peak = 0.0;
  for (std::size_t s = 0; s < values.size(); ++s) {
    for (double v : values[s]) {
      auto b = static_cast<std::size_t>((v - lo) / width);
      density[s][std::min(b, bins - 1)] += 1.0;
    }
    for (auto& d : density[s]) {
      d /= std::max<double>(1.0, static_cast<double>(values[s].size())) * width;
      peak = std::max(peak, d);
    }
  }
  const Frame f{lo, hi, 0.0, peak > 0 ? peak * 1.1 : 1.0};
  std::ostringstream os;
  open(os, f, text);
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (std::size_t b = 0; b < bins; ++b) {
      if (density[s][b] == 0.0) continue;
      const double x = lo + width * static_cast<double>(b);
      os << "<rect x=\"" << num(f.px(x)) << "\" y=\"" << num(f.py(density[s][b])) << "\" width=\""
         << num(f.px(x + width) - f.px(x)) << "\" height=\"" << num(f.py(0) - f.py(density[s][b])) << "\" fill=\""
         << colour(s) << "\" fill-opacity=\"0.45\"/>\n";
    }
    if (tau > 0.0 && tau < 1.0 && !series[s].y.empty()) {
      const double q = stats::estimate_quantile(series[s].y, tau).value;
      if (std::isfinite(q)) {
        os << "<line x1=\"" << num(f.px(q)) << "\" y1=\"" << kTop << "\" x2=\"" << num(f.px(q)) << "\" y2=\""
           << num(f.py(0)) << "\" stroke=\"" << colour(s) << "\" stroke-dasharray=\"5,3\"/>\n";
      }
    }
  }
  legend(os, series);
  os << "</svg>\n";
  return os.str();
}

std::string line_plot(const std::vector<Series>& series, const PlotText& text) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  auto xs = [](const Series& s, std::size_t i) { return s.x.empty() ? static_cast<double>(i) : s.x[i]; };
  for (const auto& s : series) {
    if (!s.x.empty() && s.x.size() != s.y.size()) throw DimensionError("line series x and y differ in length");
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, xs(s, i)), x1 = std::max(x1, xs(s, i));
      y0 = std::min(y0, s.y[i]), y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  widen(x0, x1);
  widen(y0, y1);
  const Frame f{x0, x1, y0, y1 + 0.05 * (y1 - y0)};
  std::ostringstream os;
  open(os, f, text);
  for (std::size_t s = 0; s < series.size(); ++s) {
    os << "<polyline fill=\"none\" stroke=\"" << colour(s) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].y.size(); ++i) {
      if (std::isfinite(series[s].y[i])) os << num(f.px(xs(series[s], i))) << ',' << num(f.py(series[s].y[i])) << ' ';
    }
    os << "\"/>\n";
  }
  legend(os, series);
  os << "</svg>\n";
  return os.str();
}

void save(const std::string& svg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << svg;
}

}  // namespace ganduf::svg
