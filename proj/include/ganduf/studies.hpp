#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ganduf/dataset.hpp"
#include "ganduf/design_model.hpp"
#include "ganduf/hgan.hpp"
#include "ganduf/optimizer.hpp"
#include "ganduf/uq.hpp"

namespace ganduf::studies {

/// Everything one end-to-end run needs. Seeds are resolved up front so the
/// serialized recipe alone pins the run.
struct Recipe {
  std::string name;
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  hgan::PriorConfig prior;
  hgan::TrainConfig train;
  uq::StudyProtocol study;
  /// Extra checkpoints trained for the parametric study: fitting errors per
  /// parent dimension, Wasserstein distances per child dimension. Empty
  /// lists study the main checkpoint only.
  std::vector<std::size_t> sweep_parent_dims, sweep_child_dims;
  opt::BoConfig bo;
  nlohmann::json objective;
  /// Ground-truth perturbations per solution for the comparison table.
  std::size_t ground_truth_mc = 1000;

  nlohmann::json to_json() const;
};

std::vector<std::string> recipe_names();
/// airfoil_small | airfoil_paper | metasurface_small | metasurface_paper.
/// Throws ConfigError on any other name.
Recipe make_recipe(const std::string& name, std::uint64_t seed = 0);

/// Performance of a physical nominal design under ground-truth fabrication.
struct SolutionReport {
  std::string label;
  std::vector<double> parent;
  double nominal = 0.0;
  bool nominal_feasible = true;
  double quantile = 0.0;
  double mean = 0.0;
  std::size_t infeasible = 0;
  std::vector<double> samples;  // -inf marks infeasible draws

  nlohmann::json to_json() const;
};

/// Sample k uses Rng(derive_seed(seed, k)); evaluations run on `threads`.
SolutionReport ground_truth(const Design& nominal, const geometry::PerturbationConfig& perturbation,
                            const objectives::ObjectiveEvaluator& evaluator, std::size_t samples, double tau,
                            std::uint64_t seed, unsigned threads = 1);

/// step, loss_d, loss_g, info.
void write_loss_csv(const hgan::LossHistory& history, const std::filesystem::path& path);

struct OptimizeRun {
  opt::BoTrace trace;
  SolutionReport truth;
};

/// Runs BO and writes trace.jsonl, trace.csv, summary.json,
/// solution_nominal.bin, solution_fabricated.bin (generator draws, physical
/// coordinates) and ground_truth.csv into `dir`.
OptimizeRun optimize_and_report(const GeneratorModel& model, const objectives::ObjectiveEvaluator& evaluator,
                                const opt::BoConfig& cfg, const geometry::PerturbationConfig& perturbation,
                                std::size_t ground_truth_mc, std::uint64_t ground_truth_seed,
                                const std::filesystem::path& dir);

/// solution, nominal_score, quantile_score, mean_score, infeasible, tau, parent.
void write_comparison_csv(const std::vector<SolutionReport>& rows, double tau, const std::filesystem::path& path);

/// Creates `dir`, refusing to touch an existing non-empty directory unless
/// `force` is set, in which case its contents are removed first.
void prepare_output_dir(const std::filesystem::path& dir, bool force);

struct RunOptions {
  bool force = false;
  unsigned threads = 1;
  std::ostream* log = nullptr;
};

struct RecipeReport {
  std::filesystem::path dir;
  SolutionReport nominal, robust;
};

/// synth -> train -> study -> optimize(nominal) -> optimize(quantile) -> plot.
/// Failures are rethrown as StageError naming the stage.
RecipeReport run_recipe(const Recipe& recipe, const std::filesystem::path& dir, const RunOptions& options = {});

}  // namespace ganduf::studies
