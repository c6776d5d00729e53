#pragma once

#include <memory>
#include <span>
#include <vector>

#include "ganduf/hgan.hpp"
#include "ganduf/objectives.hpp"

namespace ganduf {

/// Maps a parent code in [0,1]^d to a nominal design and to fabricated
/// realisations, all in physical coordinates. Implementations are reentrant.
class DesignModel {
 public:
  virtual ~DesignModel() = default;
  virtual DesignKind kind() const = 0;
  virtual std::size_t parent_dim() const = 0;
  virtual Design nominal(std::span<const double> parent) const = 0;
  virtual std::vector<Design> fabricated(std::span<const double> parent, std::size_t n, Rng& rng) const = 0;
};

/// Trained generator: nominal = G(c_p, 0, 0), fabricated = G(c_p, c_c, z)
/// with c_c ~ N(0, 0.5 I) and z = 0 unless noise sampling is enabled.
class GeneratorModel final : public DesignModel {
 public:
  explicit GeneratorModel(std::shared_ptr<const hgan::ModelCheckpoint> ckpt, bool sample_noise = false);
  DesignKind kind() const override { return ckpt_->kind(); }
  std::size_t parent_dim() const override { return ckpt_->prior().parent_dim; }
  Design nominal(std::span<const double> parent) const override;
  std::vector<Design> fabricated(std::span<const double> parent, std::size_t n, Rng& rng) const override;
  const hgan::ModelCheckpoint& checkpoint() const { return *ckpt_; }

 private:
  std::shared_ptr<const hgan::ModelCheckpoint> ckpt_;
  bool sample_noise_;
};

/// Ground truth for the fixture family: c_p in [0,1] picks the thickness
/// linearly across the family range, fabrication is the FFD perturbation.
class FixtureModel final : public DesignModel {
 public:
  explicit FixtureModel(objectives::RobustnessFixture fixture = {},
                        geometry::PerturbationConfig perturbation = geometry::PerturbationConfig::airfoil_defaults());
  DesignKind kind() const override { return DesignKind::Airfoil; }
  std::size_t parent_dim() const override { return 1; }
  Design nominal(std::span<const double> parent) const override;
  std::vector<Design> fabricated(std::span<const double> parent, std::size_t n, Rng& rng) const override;
  /// Parent code of a thickness inside the family range.
  double code_for_thickness(double thickness) const;

 private:
  objectives::RobustnessFixture fixture_;
  geometry::PerturbationConfig perturbation_;
};

}  // namespace ganduf
