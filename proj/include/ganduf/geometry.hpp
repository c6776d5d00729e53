#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ganduf/rng.hpp"

namespace ganduf::geometry {

inline constexpr std::size_t kAirfoilPoints = 192;
inline constexpr std::size_t kFieldSize = 64;

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct BoundingBox {
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
};

/// Closed airfoil outline: trailing edge, upper surface, leading edge, lower
/// surface, trailing edge. Point i and point 191 - i share an x-station for
/// the built-in family.
class AirfoilDesign {
 public:
  AirfoilDesign() = default;
  /// Throws ValidationError unless there are exactly 192 finite points
  /// spanning a positive width.
  explicit AirfoilDesign(std::vector<Point> points);

  const std::vector<Point>& points() const { return points_; }
  BoundingBox bbox() const;

 private:
  std::vector<Point> points_;
};

/// Regular grid of FFD control points; row index walks y, column index walks x.
class ControlLattice {
 public:
  /// Unperturbed lattice spanning `box`:
  /// P(l, m) = (x_min + l/(cols-1) * width, y_min + m/(rows-1) * height).
  static ControlLattice regular(const BoundingBox& box, std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const BoundingBox& bbox() const { return bbox_; }
  Point& at(std::size_t row, std::size_t col) { return points_[row * cols_ + col]; }
  const Point& at(std::size_t row, std::size_t col) const { return points_[row * cols_ + col]; }
  const std::vector<Point>& points() const { return points_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  BoundingBox bbox_;
  std::vector<Point> points_;
};

/// 64 x 64 level-set values, row-major; the shape is where value > threshold.
class LevelSetField {
 public:
  LevelSetField();
  /// Throws ValidationError unless 64*64 finite values are given.
  explicit LevelSetField(std::vector<double> values, double threshold = 0.0);

  double operator()(std::size_t row, std::size_t col) const { return values_[row * kFieldSize + col]; }
  double& operator()(std::size_t row, std::size_t col) { return values_[row * kFieldSize + col]; }
  const std::vector<double>& values() const { return values_; }
  double threshold() const { return threshold_; }
  /// 1 inside the shape, 0 outside.
  std::vector<std::uint8_t> binary() const;

 private:
  std::vector<double> values_;
  double threshold_ = 0.0;
};

struct PerturbationConfig {
  double noise_std = 0.02;
  double filter_std = 0.0;
  std::uint64_t seed = 0;

  static PerturbationConfig airfoil_defaults() { return {0.02, 0.0, 0}; }
  static PerturbationConfig metasurface_defaults() { return {1.0, 2.0, 0}; }
  /// noise_std > 0 and filter_std >= 0; throws ValidationError.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Free-form deformation

/// C(n, i) u^i (1 - u)^(n - i). Throws IndexError unless 0 <= i <= n.
double bernstein(int n, int i, double u);

struct ParametricCoords {
  std::vector<double> u, v;
};

/// Bounding-box-relative coordinates of every surface point. Throws
/// DegenerateGeometryError when the box has zero width or height.
ParametricCoords parametric_coords(const AirfoilDesign& design);

/// sum_l sum_m B_l^(cols-1)(u) B_m^(rows-1)(v) P(l, m) at each (u, v).
std::vector<Point> ffd_evaluate(const ParametricCoords& coords, const ControlLattice& lattice);

/// Deforms `nominal` by a 3 x 8 lattice, with parametric coordinates taken from
/// `nominal` itself. Throws ConfigError on any other lattice shape.
AirfoilDesign ffd_deform(const AirfoilDesign& nominal, const ControlLattice& lattice);

/// The 3 x 8 lattice on the design's bounding box.
ControlLattice airfoil_lattice(const AirfoilDesign& design);

/// Adds N(0, noise_std) to the y-coordinate of every control point except the
/// leftmost and rightmost columns.
void perturb_airfoil_lattice(ControlLattice& lattice, double noise_std, Rng& rng);

/// One simulated fabrication: perturbed lattice, then FFD.
AirfoilDesign perturb_airfoil(const AirfoilDesign& design, const PerturbationConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Built-in airfoil family (four-digit-style thickness and camber curves)

struct AirfoilParams {
  double thickness = 0.12;        // max thickness / chord
  double camber = 0.02;           // max camber / chord
  double camber_position = 0.4;   // chordwise location of max camber
};

/// Sampled at x = (1 + cos(2 pi i / 191)) / 2 so upper and lower points pair up.
AirfoilDesign synthetic_airfoil(const AirfoilParams& params);

struct AirfoilFamilyRange {
  double thickness_min = 0.06, thickness_max = 0.20;
  double camber_min = 0.0, camber_max = 0.06;
  double position_min = 0.3, position_max = 0.6;
};

AirfoilParams sample_airfoil_params(Rng& rng, const AirfoilFamilyRange& range = {});

/// Reads whitespace-separated "x y" rows, skipping lines that are not two
/// numbers (titles, comments). Throws IoError naming the path.
std::vector<AirfoilDesign> load_airfoil_text(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Metasurface level sets

enum class Motif { IBeam = 0, Cross = 1, SquareRing = 2 };

/// Canonical signed-distance-like field of a motif (positive inside, pixel
/// distances scaled by 1/16).
LevelSetField motif_field(Motif motif);
std::array<LevelSetField, 3> motif_fields();

/// sum_k w_k * motif_k. Throws ValidationError unless the weights are
/// nonnegative and sum to one (within 1e-9).
LevelSetField synth_metasurface_nominal(const std::array<double, 3>& weights);

/// Flat-Dirichlet draw on the 3-simplex.
std::array<double, 3> sample_motif_weights(Rng& rng);

/// Resamples the field at the pixel positions displaced by a 12 x 12 lattice
/// (Bernstein degree 11 over the full image), bilinear, edge-clamped.
LevelSetField ffd_warp_field(const LevelSetField& field, const ControlLattice& lattice);

/// The unperturbed 12 x 12 lattice over pixel coordinates [0, 63]^2.
ControlLattice metasurface_lattice();

/// Separable Gaussian blur with reflective boundaries, radius ceil(4 std).
/// std == 0 returns the field unchanged.
LevelSetField gaussian_filter(const LevelSetField& field, double stddev);

/// Lattice jitter in x and y with N(0, noise_std) pixels, warp, then blur.
LevelSetField perturb_metasurface(const LevelSetField& field, const PerturbationConfig& cfg, Rng& rng);

}  // namespace ganduf::geometry
