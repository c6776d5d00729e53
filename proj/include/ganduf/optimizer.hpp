#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ganduf/design_model.hpp"
#include "ganduf/gp.hpp"

namespace ganduf::opt {

enum class RobustMode { Nominal, Quantile, MeanStd, Reliability };

std::string to_string(RobustMode mode);
/// "nominal", "quantile", "mean_std" or "reliability"; throws ConfigError.
RobustMode parse_robust_mode(const std::string& text);

struct RobustConfig {
  RobustMode mode = RobustMode::Quantile;
  double tau = 0.05;
  /// mean_std: maximise mu - k sigma.
  double k = 1.0;
  std::size_t mc_samples = 100;
  /// reliability: success is performance >= c_star; feasible when the
  /// failure probability is at most alpha_star.
  double c_star = 0.0;
  double alpha_star = 0.05;
  /// Reuse one fabrication seed for every parent code.
  bool common_random_numbers = false;
  /// Draw generator noise z instead of fixing z = 0.
  bool sample_noise = false;
  unsigned threads = 1;

  static RobustConfig defaults(DesignKind kind, RobustMode mode = RobustMode::Quantile);
  void validate() const;
  nlohmann::json to_json() const;
};

struct ObjectiveEstimate {
  double value = 0.0;
  bool feasible = true;
  /// Per-sample objective values (infeasible samples as -inf); empty in
  /// nominal mode.
  std::vector<double> samples;
  std::string note;
};

/// One robust-objective estimate at a parent code.
ObjectiveEstimate evaluate_design_objective(const DesignModel& model, std::span<const double> parent,
                                            const objectives::ObjectiveEvaluator& evaluator, const RobustConfig& cfg,
                                            Rng& rng);

struct Budget {
  std::size_t n_init = 21;
  std::size_t n_seq = 119;
};

struct BoConfig {
  Budget budget;
  RobustConfig robust;
  gp::FitConfig gp;
  std::uint64_t seed = 0;
  /// 0 means ten times the dimension.
  std::size_t ei_restarts = 0;
  std::size_t ei_iterations = 100;

  static BoConfig defaults(DesignKind kind, RobustMode mode = RobustMode::Quantile);
  void validate() const;
  nlohmann::json to_json() const;
};

struct BoRecord {
  std::size_t iteration = 0;
  std::string phase;  // "lhs" or "ei"
  std::vector<double> parent;
  /// Raw estimate; meaningful only when feasible.
  double objective = 0.0;
  bool feasible = true;
  /// Value given to the surrogate (penalised when infeasible).
  double surrogate_target = 0.0;
  std::vector<double> mc_samples;
  double acquisition = 0.0;
  double incumbent = 0.0;
  bool has_incumbent = false;
  double wall_seconds = 0.0;
};

struct BoTrace {
  std::vector<BoRecord> records;
  std::vector<double> best_parent;
  double best_value = 0.0;
  bool has_solution = false;
  std::uint64_t seed = 0;
  nlohmann::json config;
};

using ObjectiveFn = std::function<ObjectiveEstimate(const std::vector<double>& parent, Rng& rng)>;

/// LHS start, then one EI-selected point per iteration. Each evaluation gets
/// its own random stream derived from (seed, iteration). Infeasible points
/// are given the running minimum minus one standard deviation of the
/// feasible values (1 when fewer than two exist).
BoTrace bayes_optimize(std::size_t dim, const ObjectiveFn& objective, const BoConfig& cfg);
BoTrace bayes_optimize(const DesignModel& model, const objectives::ObjectiveEvaluator& evaluator, const BoConfig& cfg);

/// Multi-start projected-gradient maximisation of EI over [0,1]^d.
struct EiMaximum {
  std::vector<double> point;
  double value = 0.0;
};
EiMaximum maximize_ei(const gp::GaussianProcess& gp, double best, std::size_t dim, std::size_t restarts,
                      std::size_t iterations, Rng& rng);

/// One JSON object per evaluation.
void write_trace_jsonl(const BoTrace& trace, const std::filesystem::path& path);
void write_trace_summary(const BoTrace& trace, const std::filesystem::path& path);
/// Deterministic columns only (no timing).
void write_trace_csv(const BoTrace& trace, const std::filesystem::path& path);

}  // namespace ganduf::opt
