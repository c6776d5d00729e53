#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ganduf/error.hpp"
#include "ganduf/geometry.hpp"

namespace ganduf::geometry {

AirfoilDesign::AirfoilDesign(std::vector<Point> points) : points_(std::move(points)) {
  if (points_.size() != kAirfoilPoints) {
    throw ValidationError("airfoil needs " + std::to_string(kAirfoilPoints) + " points, got " +
                          std::to_string(points_.size()));
  }
  for (const auto& p : points_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ValidationError("airfoil has a non-finite coordinate");
  }
  if (!(bbox().width() > 0.0)) throw ValidationError("airfoil bounding box has zero width");
}

BoundingBox AirfoilDesign::bbox() const {
  BoundingBox b{points_.front().x, points_.front().x, points_.front().y, points_.front().y};
  for (const auto& p : points_) {
    b.x_min = std::min(b.x_min, p.x);
    b.x_max = std::max(b.x_max, p.x);
    b.y_min = std::min(b.y_min, p.y);
    b.y_max = std::max(b.y_max, p.y);
  }
  return b;
}

ControlLattice ControlLattice::regular(const BoundingBox& box, std::size_t rows, std::size_t cols) {
  if (rows < 2 || cols < 2) throw ConfigError("control lattice needs at least 2 x 2 points");
  ControlLattice lat;
  lat.rows_ = rows;
  lat.cols_ = cols;
  lat.bbox_ = box;
  lat.points_.resize(rows * cols);
  for (std::size_t m = 0; m < rows; ++m) {
    for (std::size_t l = 0; l < cols; ++l) {
      lat.at(m, l) = {box.x_min + static_cast<double>(l) / static_cast<double>(cols - 1) * box.width(),
                      box.y_min + static_cast<double>(m) / static_cast<double>(rows - 1) * box.height()};
    }
  }
  return lat;
}

double bernstein(int n, int i, double u) {
  if (n < 0 || i < 0 || i > n) {
    throw IndexError("bernstein index " + std::to_string(i) + " outside [0, " + std::to_string(n) + "]");
  }
  double c = 1.0;
  for (int k = 1; k <= i; ++k) c = c * static_cast<double>(n - i + k) / static_cast<double>(k);
  return c * std::pow(u, i) * std::pow(1.0 - u, n - i);
}

ParametricCoords parametric_coords(const AirfoilDesign& design) {
  const auto box = design.bbox();
  if (!(box.width() > 0.0) || !(box.height() > 0.0)) {
    throw DegenerateGeometryError("cannot parameterise a design with a zero-extent bounding box");
  }
  ParametricCoords c;
  c.u.reserve(design.points().size());
  c.v.reserve(design.points().size());
  for (const auto& p : design.points()) {
    c.u.push_back((p.x - box.x_min) / box.width());
    c.v.push_back((p.y - box.y_min) / box.height());
  }
  return c;
}

std::vector<Point> ffd_evaluate(const ParametricCoords& coords, const ControlLattice& lattice) {
  const int nx = static_cast<int>(lattice.cols()) - 1;
  const int ny = static_cast<int>(lattice.rows()) - 1;
  std::vector<Point> out(coords.u.size());
  std::vector<double> bu(lattice.cols()), bv(lattice.rows());
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (int l = 0; l <= nx; ++l) bu[static_cast<std::size_t>(l)] = bernstein(nx, l, coords.u[k]);
    for (int m = 0; m <= ny; ++m) bv[static_cast<std::size_t>(m)] = bernstein(ny, m, coords.v[k]);
    Point p{0.0, 0.0};
    for (std::size_t m = 0; m < lattice.rows(); ++m) {
      for (std::size_t l = 0; l < lattice.cols(); ++l) {
        const double w = bu[l] * bv[m];
        p.x += w * lattice.at(m, l).x;
        p.y += w * lattice.at(m, l).y;
      }
    }
    out[k] = p;
  }
  return out;
}

ControlLattice airfoil_lattice(const AirfoilDesign& design) { return ControlLattice::regular(design.bbox(), 3, 8); }

AirfoilDesign ffd_deform(const AirfoilDesign& nominal, const ControlLattice& lattice) {
  if (lattice.rows() != 3 || lattice.cols() != 8) {
    throw ConfigError("airfoil FFD needs a 3 x 8 lattice, got " + std::to_string(lattice.rows()) + " x " +
                      std::to_string(lattice.cols()));
  }
  return AirfoilDesign(ffd_evaluate(parametric_coords(nominal), lattice));
}

void perturb_airfoil_lattice(ControlLattice& lattice, double noise_std, Rng& rng) {
  for (std::size_t m = 0; m < lattice.rows(); ++m) {
    for (std::size_t l = 1; l + 1 < lattice.cols(); ++l) lattice.at(m, l).y += rng.normal(0.0, noise_std);
  }
}

AirfoilDesign perturb_airfoil(const AirfoilDesign& design, const PerturbationConfig& cfg, Rng& rng) {
  cfg.validate();
  auto lattice = airfoil_lattice(design);
  perturb_airfoil_lattice(lattice, cfg.noise_std, rng);
  return ffd_deform(design, lattice);
}

void PerturbationConfig::validate() const {
  if (!(noise_std > 0.0)) throw ValidationError("perturbation noise_std must be positive");
  if (!(filter_std >= 0.0)) throw ValidationError("perturbation filter_std must be nonnegative");
}

// ---------------------------------------------------------------------------

AirfoilDesign synthetic_airfoil(const AirfoilParams& prm) {
  const double t = prm.thickness, m = prm.camber, p = prm.camber_position;
  if (!(t > 0.0) || m < 0.0 || !(p > 0.0 && p < 1.0)) {
    throw ValidationError("synthetic airfoil parameters out of range");
  }
  std::vector<Point> pts(kAirfoilPoints);
  const double last = static_cast<double>(kAirfoilPoints - 1);
  for (std::size_t i = 0; i < kAirfoilPoints; ++i) {
    const double beta = 2.0 * std::numbers::pi * static_cast<double>(i) / last;
    const double x = 0.5 * (1.0 + std::cos(beta));
    // Closed-trailing-edge four-digit thickness polynomial.
    const double half =
        5.0 * t * (0.2969 * std::sqrt(x) - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x - 0.1036 * x * x * x * x);
    const double yc = x < p ? m / (p * p) * (2.0 * p * x - x * x)
                            : m / ((1.0 - p) * (1.0 - p)) * ((1.0 - 2.0 * p) + 2.0 * p * x - x * x);
    const bool upper = i < kAirfoilPoints / 2;
    pts[i] = {x, upper ? yc + half : yc - half};
  }
  return AirfoilDesign(std::move(pts));
}

AirfoilParams sample_airfoil_params(Rng& rng, const AirfoilFamilyRange& r) {
  AirfoilParams p;
  p.thickness = rng.uniform(r.thickness_min, r.thickness_max);
  p.camber = rng.uniform(r.camber_min, r.camber_max);
  p.camber_position = rng.uniform(r.position_min, r.position_max);
  return p;
}

std::vector<AirfoilDesign> load_airfoil_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open airfoil file " + path.string());
  std::vector<AirfoilDesign> designs;
  std::vector<Point> current;
  auto flush = [&] {
    if (current.empty()) return;
    if (current.size() != kAirfoilPoints) {
      throw IoError("airfoil block in " + path.string() + " has " + std::to_string(current.size()) +
                    " points, expected " + std::to_string(kAirfoilPoints));
    }
    designs.emplace_back(std::move(current));
    current.clear();
  };
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    double x, y;
    std::string rest;
    if (ls >> x >> y && !(ls >> rest)) {
      current.push_back({x, y});
      if (current.size() == kAirfoilPoints) flush();
    } else {
      // Any non-coordinate line separates designs.
      flush();
    }
  }
  flush();
  if (designs.empty()) throw IoError("no airfoil coordinates found in " + path.string());
  return designs;
}

}  // namespace ganduf::geometry
