#include "ganduf/design.hpp"

#include "ganduf/error.hpp"

namespace ganduf {

std::string to_string(DesignKind kind) { return kind == DesignKind::Airfoil ? "airfoil" : "metasurface"; }

DesignKind parse_design_kind(const std::string& text) {
  if (text == "airfoil") return DesignKind::Airfoil;
  if (text == "metasurface") return DesignKind::Metasurface;
  throw ConfigError("unknown design kind '" + text + "' (expected airfoil or metasurface)");
}

std::vector<std::size_t> design_shape(DesignKind kind) {
  if (kind == DesignKind::Airfoil) return {geometry::kAirfoilPoints, 2};
  return {geometry::kFieldSize, geometry::kFieldSize};
}

std::size_t design_size(DesignKind kind) {
  const auto s = design_shape(kind);
  return s[0] * s[1];
}

void Design::check() const {
  if (values.size() != design_size(kind)) {
    throw DimensionError(to_string(kind) + " design needs " + std::to_string(design_size(kind)) + " values, got " +
                         std::to_string(values.size()));
  }
}

Design to_design(const geometry::AirfoilDesign& airfoil) {
  Design d{DesignKind::Airfoil, {}};
  d.values.reserve(2 * airfoil.points().size());
  for (const auto& p : airfoil.points()) {
    d.values.push_back(p.x);
    d.values.push_back(p.y);
  }
  return d;
}

Design to_design(const geometry::LevelSetField& field) { return {DesignKind::Metasurface, field.values()}; }

geometry::AirfoilDesign to_airfoil(const Design& design) {
  if (design.kind != DesignKind::Airfoil) throw ContractError("design is not an airfoil");
  design.check();
  std::vector<geometry::Point> pts(geometry::kAirfoilPoints);
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {design.values[2 * i], design.values[2 * i + 1]};
  return geometry::AirfoilDesign(std::move(pts));
}

geometry::LevelSetField to_field(const Design& design) {
  if (design.kind != DesignKind::Metasurface) throw ContractError("design is not a metasurface");
  design.check();
  return geometry::LevelSetField(design.values);
}

Design fabricate(const Design& design, const geometry::PerturbationConfig& cfg, Rng& rng) {
  if (design.kind == DesignKind::Airfoil) return to_design(geometry::perturb_airfoil(to_airfoil(design), cfg, rng));
  return to_design(geometry::perturb_metasurface(to_field(design), cfg, rng));
}

}  // namespace ganduf
