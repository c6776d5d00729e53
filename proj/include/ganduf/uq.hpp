#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ganduf/design_model.hpp"
#include "ganduf/stats.hpp"

namespace ganduf::uq {

using stats::estimate_quantile;
using stats::QuantileEstimate;
using stats::wasserstein1;

/// n designs G(c_p, c_c, z) in normalized space, c_c ~ N(0, 0.5 I); z = 0
/// unless sample_noise is set.
std::vector<Design> sample_fabricated(const hgan::ModelCheckpoint& ckpt, std::span<const double> parent, std::size_t n,
                                      Rng& rng, bool sample_noise = false);

struct FitConfig {
  /// 0 means three times the parent dimension.
  std::size_t restarts = 0;
  std::size_t max_iterations = 200;
  std::uint64_t seed = 0;
};

struct FitResult {
  Design target;
  std::vector<double> parent;
  double fitting_error = 0.0;
  /// Error of the best restart's starting point.
  double initial_error = 0.0;
  std::size_t restarts = 0;
  std::size_t evaluations = 0;
};

/// Bounded multi-start minimisation of ||G(c_p, 0, 0) - target||_2 over
/// c_p in [0,1]^d (projected gradient with Armijo backtracking, gradients by
/// reverse mode). `target` is in normalized space. Restart k starts from a
/// point drawn with derive_seed(seed, k), so restart sets nest.
FitResult fit_nominal(const hgan::ModelCheckpoint& ckpt, const Design& target, const FitConfig& cfg = {});

struct StudyProtocol {
  std::size_t fit_targets = 100;
  std::size_t fabrications = 100;
  std::size_t nominals = 30;
  std::size_t fit_restarts = 0;  // 0: three times the parent dimension
  std::uint64_t seed = 0;
  unsigned threads = 1;

  static StudyProtocol smoke() { return {10, 10, 3, 0, 0, 1}; }
  nlohmann::json to_json() const;
};

struct StudyRow {
  std::string study_kind;  // "fitting_error" or "wasserstein"
  std::size_t dim_setting = 0;
  std::size_t replicate_id = 0;
  double metric_value = 0.0;
};

/// Fitting errors of `fit_targets` dataset nominal designs under each
/// checkpoint; dim_setting is the checkpoint's parent dimension.
std::vector<StudyRow> fitting_study(const std::vector<const hgan::ModelCheckpoint*>& ckpts, const DesignDataset& dataset,
                                    const StudyProtocol& protocol);

/// For `nominals` random parent codes per checkpoint, W1 between objective
/// values of ground-truth perturbations of G(c_p, 0, 0) and of generator
/// fabrications; dim_setting is the checkpoint's child dimension.
std::vector<StudyRow> wasserstein_study(const std::vector<const hgan::ModelCheckpoint*>& ckpts,
                                        const objectives::ObjectiveEvaluator& evaluator,
                                        const geometry::PerturbationConfig& perturbation, const StudyProtocol& protocol);

/// Both studies, fitting rows first.
std::vector<StudyRow> parametric_study(const std::vector<const hgan::ModelCheckpoint*>& ckpts,
                                       const DesignDataset& dataset, const objectives::ObjectiveEvaluator& evaluator,
                                       const StudyProtocol& protocol);

/// Columns: study_kind, dim_setting, replicate_id, metric_value.
void write_study_csv(const std::vector<StudyRow>& rows, const std::filesystem::path& path);

}  // namespace ganduf::uq
