#include "ganduf/design_model.hpp"

#include <algorithm>
#include <cmath>

namespace ganduf {

namespace {

void check_parent(std::span<const double> parent, std::size_t dim) {
  if (parent.size() != dim) {
    throw DimensionError("parent code has " + std::to_string(parent.size()) + " entries, model expects " +
                         std::to_string(dim));
  }
}

}  // namespace

GeneratorModel::GeneratorModel(std::shared_ptr<const hgan::ModelCheckpoint> ckpt, bool sample_noise)
    : ckpt_(std::move(ckpt)), sample_noise_(sample_noise) {
  if (!ckpt_) throw ContractError("generator model needs a checkpoint");
}

Design GeneratorModel::nominal(std::span<const double> parent) const {
  const auto& prior = ckpt_->prior();
  check_parent(parent, prior.parent_dim);
  hgan::LatentSample s{{parent.begin(), parent.end()},
                       std::vector<double>(prior.child_dim, 0.0),
                       std::vector<double>(prior.noise_dim, 0.0)};
  return hgan::to_physical(*ckpt_, hgan::generate(*ckpt_, s));
}

std::vector<Design> GeneratorModel::fabricated(std::span<const double> parent, std::size_t n, Rng& rng) const {
  const auto& prior = ckpt_->prior();
  check_parent(parent, prior.parent_dim);
  if (n == 0) return {};
  const double sd = std::sqrt(hgan::PriorConfig::kVariance);
  std::vector<hgan::LatentSample> samples(n);
  for (auto& s : samples) {
    s.parent.assign(parent.begin(), parent.end());
    s.child = rng.normal_vector(prior.child_dim, sd);
    s.noise = sample_noise_ ? rng.normal_vector(prior.noise_dim, sd) : std::vector<double>(prior.noise_dim, 0.0);
  }
  auto designs = hgan::generate(*ckpt_, samples);
  for (auto& d : designs) d = hgan::to_physical(*ckpt_, d);
  return designs;
}

FixtureModel::FixtureModel(objectives::RobustnessFixture fixture, geometry::PerturbationConfig perturbation)
    : fixture_(fixture), perturbation_(perturbation) {
  perturbation_.validate();
}

Design FixtureModel::nominal(std::span<const double> parent) const {
  check_parent(parent, 1);
  const auto& r = fixture_.family;
  const double c = std::clamp(parent[0], 0.0, 1.0);
  return to_design(geometry::synthetic_airfoil(
      {r.thickness_min + c * (r.thickness_max - r.thickness_min), r.camber_min, r.position_min}));
}

std::vector<Design> FixtureModel::fabricated(std::span<const double> parent, std::size_t n, Rng& rng) const {
  const auto base = nominal(parent);
  std::vector<Design> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(fabricate(base, perturbation_, rng));
  return out;
}

double FixtureModel::code_for_thickness(double thickness) const {
  const auto& r = fixture_.family;
  return (thickness - r.thickness_min) / (r.thickness_max - r.thickness_min);
}

}  // namespace ganduf
