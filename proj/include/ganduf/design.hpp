#pragma once

#include <string>
#include <vector>

#include "ganduf/geometry.hpp"

namespace ganduf {

enum class DesignKind { Airfoil, Metasurface };

std::string to_string(DesignKind kind);
/// Accepts "airfoil" / "metasurface"; throws ConfigError otherwise.
DesignKind parse_design_kind(const std::string& text);

/// Row-major extents of one design: {192, 2} or {64, 64}.
std::vector<std::size_t> design_shape(DesignKind kind);
std::size_t design_size(DesignKind kind);

/// Kind-tagged flat design values; the common currency between the dataset,
/// the generator and the objective evaluators.
struct Design {
  DesignKind kind = DesignKind::Airfoil;
  std::vector<double> values;

  /// Throws DimensionError when values.size() does not match the kind.
  void check() const;
  bool operator==(const Design&) const = default;
};

Design to_design(const geometry::AirfoilDesign& airfoil);
Design to_design(const geometry::LevelSetField& field);
geometry::AirfoilDesign to_airfoil(const Design& design);
geometry::LevelSetField to_field(const Design& design);

/// One ground-truth fabrication of `design` by the kind's perturbation process.
Design fabricate(const Design& design, const geometry::PerturbationConfig& cfg, Rng& rng);

}  // namespace ganduf
