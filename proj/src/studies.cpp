#include "ganduf/studies.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

#include "ganduf/array_io.hpp"
#include "ganduf/error.hpp"
#include "ganduf/parallel.hpp"
#include "ganduf/svg.hpp"

namespace ganduf::studies {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class F>
auto stage(const std::string& name, std::ostream* log, F&& body) {
  if (log) *log << "[" << name << "]" << std::endl;
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError& e) {
    throw StageError(name, e.what(), true);
  } catch (const ValidationError& e) {
    throw StageError(name, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), false);
  }
}

json dataset_json(const DatasetConfig& d) {
  json j = {{"kind", to_string(d.kind)},
            {"n_nominal", d.n_nominal},
            {"m_fabricated", d.m_fabricated},
            {"perturbation",
             {{"noise_std", d.perturbation.noise_std},
              {"filter_std", d.perturbation.filter_std},
              {"seed", d.perturbation.seed}}}};
  if (d.source) j["source"] = d.source->string();
  return j;
}

void save_designs(const std::vector<Design>& designs, DesignKind kind, const fs::path& path) {
  const auto shape = design_shape(kind);
  io::NdArray a;
  a.shape = {designs.size()};
  for (auto e : shape) a.shape.push_back(e);
  for (const auto& d : designs) a.data.insert(a.data.end(), d.values.begin(), d.values.end());
  io::save_array(path, a);
}

std::vector<double> incumbents(const opt::BoTrace& trace) {
  std::vector<double> v;
  for (const auto& r : trace.records) v.push_back(r.has_incumbent ? r.incumbent : std::nan(""));
  return v;
}

/// One checkpoint per requested dimension, reusing `main` where it matches.
std::vector<std::shared_ptr<hgan::ModelCheckpoint>> sweep(const std::vector<std::size_t>& dims, bool parent,
                                                          const Recipe& r, const DesignDataset& ds,
                                                          const std::shared_ptr<hgan::ModelCheckpoint>& main,
                                                          std::ostream* log) {
  if (dims.empty()) return {main};
  std::vector<std::shared_ptr<hgan::ModelCheckpoint>> out;
  for (auto d : dims) {
    auto prior = r.prior;
    (parent ? prior.parent_dim : prior.child_dim) = d;
    if (prior == r.prior) {
      out.push_back(main);
      continue;
    }
    if (log) *log << "  training " << (parent ? "parent" : "child") << " dim " << d << std::endl;
    out.push_back(std::make_shared<hgan::ModelCheckpoint>(hgan::train(ds, r.train, prior)));
  }
  return out;
}

std::vector<const hgan::ModelCheckpoint*> raw(const std::vector<std::shared_ptr<hgan::ModelCheckpoint>>& v) {
  std::vector<const hgan::ModelCheckpoint*> out;
  for (const auto& p : v) out.push_back(p.get());
  return out;
}

}  // namespace

json Recipe::to_json() const {
  return {{"name", name},
          {"seed", seed},
          {"dataset", dataset_json(dataset)},
          {"prior", prior.to_json()},
          {"train", train.to_json()},
          {"study", study.to_json()},
          {"sweep_parent_dims", sweep_parent_dims},
          {"sweep_child_dims", sweep_child_dims},
          {"bo", bo.to_json()},
          {"objective", objective},
          {"ground_truth_mc", ground_truth_mc}};
}

std::vector<std::string> recipe_names() {
  return {"airfoil_small", "airfoil_paper", "metasurface_small", "metasurface_paper"};
}

Recipe make_recipe(const std::string& name, std::uint64_t seed) {
  const auto names = recipe_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw ConfigError("unknown recipe '" + name +
                      "' (expected airfoil_small, airfoil_paper, metasurface_small or metasurface_paper)");
  }
  const bool airfoil = name.rfind("airfoil", 0) == 0;
  const bool small = name.size() > 6 && name.substr(name.size() - 6) == "_small";
  const DesignKind kind = airfoil ? DesignKind::Airfoil : DesignKind::Metasurface;

  Recipe r;
  r.name = name;
  r.seed = seed;
  r.dataset = DatasetConfig::defaults(kind);
  r.dataset.perturbation.seed = derive_seed(seed, 1);
  r.prior = hgan::PriorConfig::defaults(kind);
  r.train = hgan::TrainConfig::defaults(kind);
  r.train.seed = derive_seed(seed, 2);
  r.study.seed = derive_seed(seed, 3);
  r.bo = opt::BoConfig::defaults(kind, opt::RobustMode::Quantile);
  r.bo.seed = derive_seed(seed, 4);
  r.objective = {{"type", airfoil ? "airfoil_proxy" : "metasurface_proxy"}};

  if (airfoil && small) {
    r.dataset.n_nominal = 64;
    r.dataset.m_fabricated = 5;
    r.train.steps = 500;
    r.study = uq::StudyProtocol::smoke();
    r.study.seed = derive_seed(seed, 3);
    r.bo.budget = {8, 12};
    r.bo.robust.mc_samples = 25;
  } else if (airfoil) {
    r.sweep_parent_dims = {3, 5, 7, 9};
    r.sweep_child_dims = {1, 5, 10};
  } else if (small) {
    r.dataset.n_nominal = 32;
    r.dataset.m_fabricated = 3;
    r.train.steps = 100;
    r.train.batch_size = 16;
    r.study = {5, 5, 2, 3, derive_seed(seed, 3), 1};
    r.bo.budget = {5, 10};
    r.bo.robust.mc_samples = 5;
    r.ground_truth_mc = 100;
  } else {
    r.sweep_parent_dims = {3, 5, 7};
  }
  return r;
}

// ---------------------------------------------------------------------------

json SolutionReport::to_json() const {
  return {{"label", label},
          {"parent", parent},
          {"nominal_score", nominal_feasible ? json(nominal) : json(nullptr)},
          {"quantile_score", std::isfinite(quantile) ? json(quantile) : json(nullptr)},
          {"mean_score", std::isfinite(mean) ? json(mean) : json(nullptr)},
          {"infeasible", infeasible},
          {"samples", samples.size()}};
}

SolutionReport ground_truth(const Design& nominal, const geometry::PerturbationConfig& perturbation,
                            const objectives::ObjectiveEvaluator& evaluator, std::size_t samples, double tau,
                            std::uint64_t seed, unsigned threads) {
  if (samples == 0) throw ConfigError("ground truth needs at least one sample");
  SolutionReport rep;
  const auto nom = evaluator.evaluate(nominal);
  rep.nominal_feasible = nom.feasible;
  rep.nominal = nom.feasible ? nom.value : kNegInf;
  rep.samples.assign(samples, kNegInf);
  parallel_for(samples, threads, [&](std::size_t k) {
    Rng rng(derive_seed(seed, k));
    const auto e = evaluator.evaluate(fabricate(nominal, perturbation, rng));
    if (e.feasible) rep.samples[k] = e.value;
  });
  std::vector<double> finite;
  for (double v : rep.samples) {
    if (std::isfinite(v)) {
      finite.push_back(v);
    } else {
      ++rep.infeasible;
    }
  }
  rep.quantile = stats::estimate_quantile(rep.samples, tau).value;
  rep.mean = finite.empty() ? kNegInf : stats::mean(finite);
  return rep;
}

void write_loss_csv(const hgan::LossHistory& h, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,loss_d,loss_g,info\n" << std::setprecision(17);
  for (std::size_t i = 0; i < h.size(); ++i) {
    out << i + 1 << ',' << h.loss_d[i] << ',' << h.loss_g[i] << ',' << h.info[i] << '\n';
  }
}

OptimizeRun optimize_and_report(const GeneratorModel& model, const objectives::ObjectiveEvaluator& evaluator,
                                const opt::BoConfig& cfg, const geometry::PerturbationConfig& perturbation,
                                std::size_t ground_truth_mc, std::uint64_t ground_truth_seed, const fs::path& dir) {
  OptimizeRun run;
  run.trace = opt::bayes_optimize(model, evaluator, cfg);
  opt::write_trace_jsonl(run.trace, dir / "trace.jsonl");
  opt::write_trace_csv(run.trace, dir / "trace.csv");
  opt::write_trace_summary(run.trace, dir / "summary.json");
  if (!run.trace.has_solution) throw Error("optimisation found no feasible design");

  const auto nominal = model.nominal(run.trace.best_parent);
  save_designs({nominal}, nominal.kind, dir / "solution_nominal.bin");
  Rng fab_rng(derive_seed(cfg.seed, 20));
  const std::size_t draws = std::max<std::size_t>(cfg.robust.mc_samples, 1);
  save_designs(model.fabricated(run.trace.best_parent, draws, fab_rng), nominal.kind, dir / "solution_fabricated.bin");

  run.truth = ground_truth(nominal, perturbation, evaluator, ground_truth_mc, cfg.robust.tau, ground_truth_seed,
                           cfg.robust.threads);
  run.truth.label = opt::to_string(cfg.robust.mode);
  run.truth.parent = run.trace.best_parent;
  std::ofstream out(dir / "ground_truth.csv");
  if (!out) throw IoError("cannot write " + (dir / "ground_truth.csv").string());
  out << "sample,feasible,value\n" << std::setprecision(17);
  for (std::size_t k = 0; k < run.truth.samples.size(); ++k) {
    const double v = run.truth.samples[k];
    out << k << ',' << (std::isfinite(v) ? 1 : 0) << ',';
    if (std::isfinite(v)) out << v;
    out << '\n';
  }
  return run;
}

void write_comparison_csv(const std::vector<SolutionReport>& rows, double tau, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "solution,nominal_score,quantile_score,mean_score,infeasible,tau,parent\n" << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.label << ',' << r.nominal << ',' << r.quantile << ',' << r.mean << ',' << r.infeasible << ',' << tau
        << ',';
    for (std::size_t j = 0; j < r.parent.size(); ++j) out << (j ? ";" : "") << r.parent[j];
    out << '\n';
  }
}

void prepare_output_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw ConfigError(dir.string() + " is not empty (pass --force to overwrite)");
      for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
    }
  }
  fs::create_directories(dir);
}

// ---------------------------------------------------------------------------

RecipeReport run_recipe(const Recipe& r, const fs::path& dir, const RunOptions& options) {
  std::ostream* log = options.log;
  stage("prepare", log, [&] {
    prepare_output_dir(dir, options.force);
    std::ofstream(dir / "recipe.json") << r.to_json().dump(2) << '\n';
    return 0;
  });

  auto dataset_cfg = r.dataset;
  dataset_cfg.threads = options.threads;
  const auto dataset = stage("synth", log, [&] {
    auto ds = build_dataset(dataset_cfg);
    save_dataset(ds, dir / "dataset");
    return ds;
  });

  const auto ckpt = stage("train", log, [&] {
    fs::create_directories(dir / "train");
    hgan::TrainHooks hooks;
    if (log) {
      hooks.on_step = [&](std::size_t step, double ld, double lg) {
        if (step % 100 == 0) *log << "  step " << step << " loss_d " << ld << " loss_g " << lg << std::endl;
      };
    }
    auto c = std::make_shared<hgan::ModelCheckpoint>(hgan::train(dataset, r.train, r.prior, hooks));
    hgan::save_checkpoint(*c, dir / "train" / "checkpoint.bin");
    write_loss_csv(c->history, dir / "train" / "losses.csv");
    return c;
  });

  const auto evaluator = stage("objective", log, [&] { return objectives::make_evaluator(r.objective); });
  if (evaluator->kind() != r.dataset.kind) {
    throw StageError("objective", "objective kind does not match the recipe's design kind", true);
  }

  stage("study", log, [&] {
    fs::create_directories(dir / "study");
    auto protocol = r.study;
    protocol.threads = options.threads;
    const auto fit_ckpts = sweep(r.sweep_parent_dims, true, r, dataset, ckpt, log);
    const auto w_ckpts = sweep(r.sweep_child_dims, false, r, dataset, ckpt, log);
    auto rows = uq::fitting_study(raw(fit_ckpts), dataset, protocol);
    const auto w = uq::wasserstein_study(raw(w_ckpts), *evaluator, r.dataset.perturbation, protocol);
    rows.insert(rows.end(), w.begin(), w.end());
    uq::write_study_csv(rows, dir / "study" / "study.csv");
    return 0;
  });

  const GeneratorModel model(ckpt);
  auto run_mode = [&](opt::RobustMode mode, const std::string& sub) {
    return stage("optimize_" + sub, log, [&] {
      fs::create_directories(dir / ("optimize_" + sub));
      auto cfg = r.bo;
      cfg.robust.mode = mode;
      cfg.robust.threads = options.threads;
      return optimize_and_report(model, *evaluator, cfg, r.dataset.perturbation, r.ground_truth_mc,
                                 derive_seed(r.seed, 5), dir / ("optimize_" + sub));
    });
  };
  const auto standard = run_mode(opt::RobustMode::Nominal, "nominal");
  const auto robust = run_mode(opt::RobustMode::Quantile, "quantile");

  RecipeReport report{dir, standard.truth, robust.truth};
  report.nominal.label = "standard";
  report.robust.label = "robust";

  stage("plot", log, [&] {
    fs::create_directories(dir / "plots");
    svg::save(svg::histogram({{"standard", {}, report.nominal.samples}, {"robust", {}, report.robust.samples}},
                             {"Ground-truth performance of fabricated solutions", "objective", "density"}, 30,
                             r.bo.robust.tau),
              dir / "plots" / "fabricated_performance.svg");
    svg::save(svg::line_plot({{"standard (nominal objective)", {}, incumbents(standard.trace)},
                              {"robust (quantile objective)", {}, incumbents(robust.trace)}},
                             {"Optimisation convergence", "evaluation", "best objective so far"}),
              dir / "plots" / "convergence.svg");
    svg::save(svg::line_plot({{"discriminator", {}, ckpt->history.loss_d}, {"generator", {}, ckpt->history.loss_g}},
                             {"Training losses", "step", "loss"}),
              dir / "plots" / "losses.svg");
    return 0;
  });

  stage("report", log, [&] {
    write_comparison_csv({report.nominal, report.robust}, r.bo.robust.tau, dir / "comparison.csv");
    json summary = {{"recipe", r.to_json()},
                    {"solutions", {{"standard", report.nominal.to_json()}, {"robust", report.robust.to_json()}}},
                    {"robust_quantile_at_least_standard", report.robust.quantile >= report.nominal.quantile},
                    {"standard_nominal_at_least_robust", report.nominal.nominal >= report.robust.nominal}};
    std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
    return 0;
  });
  return report;
}

}  // namespace ganduf::studies
