#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ganduf/design.hpp"
#include "json.hpp"

namespace ganduf::objectives {

/// A finite score, or an infeasibility marker (optimizers treat it as -inf).
struct Evaluation {
  double value = 0.0;
  bool feasible = true;
  std::string reason;

  static Evaluation ok(double v) { return {v, true, {}}; }
  static Evaluation infeasible(std::string why) { return {0.0, false, std::move(why)}; }
};

// ---------------------------------------------------------------------------
// Airfoil lift-to-drag stand-in
//
//   score = h_f exp(-(T - T_f)^2 / 2 w_f^2) + h_r exp(-(T - T_r)^2 / 2 w_r^2)
//         + k_c C - k_r R
//
// T and C are the maximum thickness and camber of the [1, 2, 1]/4-smoothed
// outline (upper point i paired with lower point 191 - i), R the sum of
// squared second differences of the raw y coordinates. The narrow peak at
// T_f out-scores the broad one at T_r nominally but is fragile under
// thickness noise.

struct AirfoilProxyParams {
  double fragile_thickness = 0.16;
  double fragile_width = 0.008;
  double fragile_height = 1.0;
  double robust_thickness = 0.09;
  double robust_width = 0.025;
  double robust_height = 0.8;
  double camber_gain = 1.0;
  double roughness_weight = 10.0;

  nlohmann::json to_json() const;
  static AirfoilProxyParams from_json(const nlohmann::json& j);
};

struct AirfoilFeatures {
  double thickness = 0.0;
  double camber = 0.0;
  double roughness = 0.0;
  double signed_area = 0.0;
};

/// Features of a 192-point outline; no validity checks.
AirfoilFeatures airfoil_features(const std::vector<geometry::Point>& points);

/// Infeasible for non-finite coordinates, zero chord or an inverted
/// (negative-area) outline. A flat plate is feasible.
Evaluation airfoil_performance(const std::vector<geometry::Point>& points, const AirfoilProxyParams& params = {});
Evaluation airfoil_performance(const geometry::AirfoilDesign& design, const AirfoilProxyParams& params = {});

// ---------------------------------------------------------------------------
// Metasurface absorbance stand-in
//
// With fill fraction phi, boundary length p (pixel edges / 256) and
// 4-connected component count K of the thresholded field:
//   f0    = 8.0 + 1.5 phi + 0.5 p - 0.1 (K - 1)          [THz]
//   gamma = 0.25 (1 + 0.2 (K - 1))
//   A(f)  = floor + (1 - floor) (1 - exp(-phi / 0.1)) / (1 + ((f - f0) / gamma)^2)
//   J     = sum_i A(f_i),  f_i equidistant on [8, 9] THz.

struct MetasurfaceProxyParams {
  double floor = 0.02;
  double band_lo = 8.0;
  double band_hi = 9.0;
  std::size_t n_frequencies = 11;
  double base_frequency = 8.0;
  double fill_shift = 1.5;
  double perimeter_shift = 0.5;
  double component_shift = 0.1;
  double base_width = 0.25;
  double component_broadening = 0.2;
  double fill_saturation = 0.1;

  nlohmann::json to_json() const;
  static MetasurfaceProxyParams from_json(const nlohmann::json& j);
};

struct FieldFeatures {
  double fill_fraction = 0.0;
  double perimeter = 0.0;  // boundary pixel edges / 256
  std::size_t components = 0;
};

FieldFeatures field_features(const geometry::LevelSetField& field);

struct AbsorbanceSpectrum {
  std::vector<double> frequencies;
  std::vector<double> absorbance;
};

AbsorbanceSpectrum absorbance_spectrum(const geometry::LevelSetField& field, const MetasurfaceProxyParams& params = {});
/// J in [0, n_f].
double metasurface_performance(const geometry::LevelSetField& field, const MetasurfaceProxyParams& params = {});

// ---------------------------------------------------------------------------

class ObjectiveEvaluator {
 public:
  virtual ~ObjectiveEvaluator() = default;
  virtual DesignKind kind() const = 0;
  virtual std::string name() const = 0;
  virtual nlohmann::json describe() const = 0;
  /// `design` is in physical coordinates.
  virtual Evaluation evaluate(const Design& design) const = 0;
};

class AirfoilProxy final : public ObjectiveEvaluator {
 public:
  explicit AirfoilProxy(AirfoilProxyParams params = {}) : params_(params) {}
  DesignKind kind() const override { return DesignKind::Airfoil; }
  std::string name() const override { return "airfoil_proxy"; }
  nlohmann::json describe() const override;
  Evaluation evaluate(const Design& design) const override;
  const AirfoilProxyParams& params() const { return params_; }

 private:
  AirfoilProxyParams params_;
};

class MetasurfaceProxy final : public ObjectiveEvaluator {
 public:
  explicit MetasurfaceProxy(MetasurfaceProxyParams params = {});
  DesignKind kind() const override { return DesignKind::Metasurface; }
  std::string name() const override { return "metasurface_proxy"; }
  nlohmann::json describe() const override;
  Evaluation evaluate(const Design& design) const override;

 private:
  MetasurfaceProxyParams params_;
};

/// Writes the design to a temporary array file, runs `command` with every
/// "{}" replaced by that path (appended when absent) and reads one real from
/// standard output. A nonzero exit status or unparsable output is infeasible.
class ExternalCommand final : public ObjectiveEvaluator {
 public:
  ExternalCommand(DesignKind kind, std::string command);
  DesignKind kind() const override { return kind_; }
  std::string name() const override { return "external_command"; }
  nlohmann::json describe() const override;
  Evaluation evaluate(const Design& design) const override;

 private:
  DesignKind kind_;
  std::string command_;
};

/// {"type": "airfoil_proxy" | "metasurface_proxy" | "external_command", ...}
std::unique_ptr<ObjectiveEvaluator> make_evaluator(const nlohmann::json& spec);

// ---------------------------------------------------------------------------
// Fragile / robust fixture

/// Two members of the built-in airfoil family, identical apart from thickness.
struct RobustnessFixture {
  geometry::AirfoilParams fragile{0.16, 0.02, 0.4};
  geometry::AirfoilParams robust{0.09, 0.02, 0.4};
  /// One-parameter family through both: thickness in [0.06, 0.20].
  geometry::AirfoilFamilyRange family{0.06, 0.20, 0.02, 0.02, 0.4, 0.4};
};

struct FixtureSummary {
  double nominal = 0.0;
  double quantile = 0.0;
  double mean = 0.0;
  std::size_t infeasible = 0;
};

struct FixtureReport {
  FixtureSummary fragile, robust;
  std::size_t mc_samples = 0;
  double tau = 0.05;
  /// fragile.nominal > robust.nominal and fragile.quantile < robust.quantile.
  bool gap_holds() const;
};

/// Scores `params` nominally and over `mc_samples` ground-truth perturbations.
FixtureSummary score_under_perturbation(const geometry::AirfoilParams& params, const AirfoilProxyParams& proxy,
                                        std::size_t mc_samples, double tau, std::uint64_t seed);
FixtureReport verify_fixture(const RobustnessFixture& fixture = {}, const AirfoilProxyParams& proxy = {},
                             std::size_t mc_samples = 10000, double tau = 0.05, std::uint64_t seed = 0);

}  // namespace ganduf::objectives
