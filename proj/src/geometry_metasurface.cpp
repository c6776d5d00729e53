#include <algorithm>
#include <cmath>

#include "ganduf/error.hpp"
#include "ganduf/geometry.hpp"

namespace ganduf::geometry {

namespace {

constexpr std::size_t kN = kFieldSize;
constexpr double kCentre = (static_cast<double>(kN) - 1.0) / 2.0;
constexpr double kDistanceScale = 16.0;

/// Inside-positive signed distance to an axis-aligned box.
double box_field(double px, double py, double cx, double cy, double hx, double hy) {
  const double qx = std::abs(px - cx) - hx;
  const double qy = std::abs(py - cy) - hy;
  const double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
  const double inside = std::min(std::max(qx, qy), 0.0);
  return -(outside + inside);
}

double motif_value(Motif motif, double px, double py) {
  switch (motif) {
    case Motif::IBeam:
      return std::max({box_field(px, py, 0.0, -18.0, 18.0, 4.0), box_field(px, py, 0.0, 18.0, 18.0, 4.0),
                       box_field(px, py, 0.0, 0.0, 4.0, 18.0)});
    case Motif::Cross:
      return std::max(box_field(px, py, 0.0, 0.0, 24.0, 5.0), box_field(px, py, 0.0, 0.0, 5.0, 24.0));
    case Motif::SquareRing:
      return std::min(box_field(px, py, 0.0, 0.0, 24.0, 24.0), -box_field(px, py, 0.0, 0.0, 16.0, 16.0));
  }
  return 0.0;
}

/// Reflective index ("d c b a | a b c d") for a signal of length n.
std::size_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  const std::ptrdiff_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < n ? i : period - 1 - i);
}

double bilinear(const LevelSetField& f, double x, double y) {
  const double hi = static_cast<double>(kN - 1);
  x = std::clamp(x, 0.0, hi);
  y = std::clamp(y, 0.0, hi);
  const auto c0 = std::min(static_cast<std::size_t>(std::floor(x)), kN - 1);
  const auto r0 = std::min(static_cast<std::size_t>(std::floor(y)), kN - 1);
  const std::size_t c1 = std::min(c0 + 1, kN - 1);
  const std::size_t r1 = std::min(r0 + 1, kN - 1);
  const double fx = x - static_cast<double>(c0);
  const double fy = y - static_cast<double>(r0);
  const double top = (1.0 - fx) * f(r0, c0) + fx * f(r0, c1);
  const double bottom = (1.0 - fx) * f(r1, c0) + fx * f(r1, c1);
  return (1.0 - fy) * top + fy * bottom;
}

}  // namespace

LevelSetField::LevelSetField() : values_(kN * kN, 0.0) {}

LevelSetField::LevelSetField(std::vector<double> values, double threshold)
    : values_(std::move(values)), threshold_(threshold) {
  if (values_.size() != kN * kN) {
    throw ValidationError("level-set field needs " + std::to_string(kN * kN) + " values, got " +
                          std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("level-set field has a non-finite value");
  }
}

std::vector<std::uint8_t> LevelSetField::binary() const {
  std::vector<std::uint8_t> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(),
                 [t = threshold_](double v) { return static_cast<std::uint8_t>(v > t ? 1 : 0); });
  return out;
}

LevelSetField motif_field(Motif motif) {
  std::vector<double> v(kN * kN);
  for (std::size_t r = 0; r < kN; ++r) {
    for (std::size_t c = 0; c < kN; ++c) {
      const double px = static_cast<double>(c) - kCentre;
      const double py = static_cast<double>(r) - kCentre;
      v[r * kN + c] = motif_value(motif, px, py) / kDistanceScale;
    }
  }
  return LevelSetField(std::move(v));
}

std::array<LevelSetField, 3> motif_fields() {
  return {motif_field(Motif::IBeam), motif_field(Motif::Cross), motif_field(Motif::SquareRing)};
}

LevelSetField synth_metasurface_nominal(const std::array<double, 3>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("motif weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("motif weights must sum to one");
  const auto motifs = motif_fields();
  std::vector<double> v(kN * kN, 0.0);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& mv = motifs[k].values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += weights[k] * mv[i];
  }
  return LevelSetField(std::move(v));
}

std::array<double, 3> sample_motif_weights(Rng& rng) {
  // Normalised unit exponentials are Dirichlet(1, 1, 1).
  std::array<double, 3> w{};
  double total = 0.0;
  for (auto& x : w) {
    x = -std::log(1.0 - rng.uniform());
    total += x;
  }
  for (auto& x : w) x /= total;
  return w;
}

ControlLattice metasurface_lattice() {
  const double hi = static_cast<double>(kN - 1);
  return ControlLattice::regular({0.0, hi, 0.0, hi}, 12, 12);
}

LevelSetField ffd_warp_field(const LevelSetField& field, const ControlLattice& lattice) {
  const int nx = static_cast<int>(lattice.cols()) - 1;
  const int ny = static_cast<int>(lattice.rows()) - 1;
  const double hi = static_cast<double>(kN - 1);
  // Basis tables: pixel index -> Bernstein weights.
  std::vector<double> bu(kN * lattice.cols()), bv(kN * lattice.rows());
  for (std::size_t p = 0; p < kN; ++p) {
    const double t = static_cast<double>(p) / hi;
    for (int l = 0; l <= nx; ++l) bu[p * lattice.cols() + static_cast<std::size_t>(l)] = bernstein(nx, l, t);
    for (int m = 0; m <= ny; ++m) bv[p * lattice.rows() + static_cast<std::size_t>(m)] = bernstein(ny, m, t);
  }
  std::vector<double> out(kN * kN);
  for (std::size_t r = 0; r < kN; ++r) {
    for (std::size_t c = 0; c < kN; ++c) {
      double x = 0.0, y = 0.0;
      for (std::size_t m = 0; m < lattice.rows(); ++m) {
        const double wm = bv[r * lattice.rows() + m];
        for (std::size_t l = 0; l < lattice.cols(); ++l) {
          const double w = wm * bu[c * lattice.cols() + l];
          x += w * lattice.at(m, l).x;
          y += w * lattice.at(m, l).y;
        }
      }
      out[r * kN + c] = bilinear(field, x, y);
    }
  }
  return LevelSetField(std::move(out), field.threshold());
}

LevelSetField gaussian_filter(const LevelSetField& field, double stddev) {
  if (stddev < 0.0) throw ValidationError("filter std must be nonnegative");
  if (stddev == 0.0) return field;
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * stddev));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * static_cast<double>(k * k) / (stddev * stddev));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (auto& w : kernel) w /= total;

  const auto n = static_cast<std::ptrdiff_t>(kN);
  std::vector<double> tmp(kN * kN, 0.0), out(kN * kN, 0.0);
  const auto& in = field.values();
  for (std::ptrdiff_t r = 0; r < n; ++r)
    for (std::ptrdiff_t c = 0; c < n; ++c) {
      double s = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k)
        s += kernel[static_cast<std::size_t>(k + radius)] * in[static_cast<std::size_t>(r) * kN + reflect(c + k, n)];
      tmp[static_cast<std::size_t>(r) * kN + static_cast<std::size_t>(c)] = s;
    }
  for (std::ptrdiff_t r = 0; r < n; ++r)
    for (std::ptrdiff_t c = 0; c < n; ++c) {
      double s = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k)
        s += kernel[static_cast<std::size_t>(k + radius)] * tmp[reflect(r + k, n) * kN + static_cast<std::size_t>(c)];
      out[static_cast<std::size_t>(r) * kN + static_cast<std::size_t>(c)] = s;
    }
  return LevelSetField(std::move(out), field.threshold());
}

LevelSetField perturb_metasurface(const LevelSetField& field, const PerturbationConfig& cfg, Rng& rng) {
  cfg.validate();
  auto lattice = metasurface_lattice();
  for (std::size_t m = 0; m < lattice.rows(); ++m) {
    for (std::size_t l = 0; l < lattice.cols(); ++l) {
      lattice.at(m, l).x += rng.normal(0.0, cfg.noise_std);
      lattice.at(m, l).y += rng.normal(0.0, cfg.noise_std);
    }
  }
  return gaussian_filter(ffd_warp_field(field, lattice), cfg.filter_std);
}

}  // namespace ganduf::geometry
