#include "ganduf/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "ganduf/array_io.hpp"
#include "ganduf/error.hpp"
#include "ganduf/studies.hpp"
#include "ganduf/svg.hpp"

namespace ganduf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ObjectiveFlags {
  std::string type;
  std::string command;

  void add(CLI::App* app) {
    app->add_option("--objective", type, "airfoil_proxy, metasurface_proxy or external_command (default: the proxy for the design kind)");
    app->add_option("--command", command, "shell command for external_command; {} is replaced by the design file");
  }

  std::unique_ptr<objectives::ObjectiveEvaluator> make(DesignKind kind) const {
    std::string t = type;
    if (t.empty()) t = command.empty() ? (kind == DesignKind::Airfoil ? "airfoil_proxy" : "metasurface_proxy") : "external_command";
    json spec = {{"type", t}};
    if (t == "external_command") {
      if (command.empty()) throw ConfigError("--objective external_command needs --command");
      spec["kind"] = to_string(kind);
      spec["command"] = command;
    }
    auto e = objectives::make_evaluator(spec);
    if (e->kind() != kind) throw ConfigError("objective " + t + " does not evaluate " + to_string(kind) + " designs");
    return e;
  }
};

struct PerturbationFlags {
  std::optional<double> noise_std, filter_std;

  void add(CLI::App* app) {
    app->add_option("--noise-std", noise_std, "ground-truth lattice noise std (default per design kind)");
    app->add_option("--filter-std", filter_std, "ground-truth Gaussian filter std (default per design kind)");
  }

  geometry::PerturbationConfig resolve(DesignKind kind) const {
    auto p = kind == DesignKind::Airfoil ? geometry::PerturbationConfig::airfoil_defaults()
                                         : geometry::PerturbationConfig::metasurface_defaults();
    if (noise_std) p.noise_std = *noise_std;
    if (filter_std) p.filter_std = *filter_std;
    p.validate();
    return p;
  }
};

std::shared_ptr<hgan::ModelCheckpoint> load_ckpt(const std::string& path) {
  return std::make_shared<hgan::ModelCheckpoint>(hgan::load_checkpoint(path));
}

std::vector<double> parent_or_random(std::vector<double> parent, std::size_t dim, std::uint64_t seed) {
  if (parent.empty()) {
    Rng rng(derive_seed(seed, 9));
    return rng.uniform_vector(dim);
  }
  if (parent.size() != dim) {
    throw ConfigError("--parent needs " + std::to_string(dim) + " values, got " + std::to_string(parent.size()));
  }
  for (double c : parent) {
    if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("--parent values must lie in [0, 1]");
  }
  return parent;
}

/// CSV with a header; returns the named column as doubles (blank cells are NaN).
std::vector<double> read_csv_column(const fs::path& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) header.push_back(cell);
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) throw IoError(path.string() + " has no column '" + column + "'");
  const auto idx = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::string cell;
    for (std::size_t i = 0; i <= idx; ++i) std::getline(ls, cell, ',');
    out.push_back(cell.empty() ? std::nan("") : std::stod(cell));
  }
  return out;
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int main(const std::vector<std::string>& args) {
    CLI::App app{"Generative design under fabrication uncertainty: datasets, hierarchical GAN training, "
                 "uncertainty quantification and robust Bayesian optimisation."};
    app.name("ganduf");
    app.set_config("--config", "", "read options from a TOML file (flags take precedence)");
    app.option_defaults()->always_capture_default();
    app.add_option("--threads", threads_, "worker thread cap")->check(CLI::Range(1u, 256u));
    app.require_subcommand(1, 1);
    setup_synth(app);
    setup_train(app);
    setup_uq(app);
    setup_optimize(app);
    setup_study(app);
    setup_plot(app);
    setup_fixture(app);
    setup_recipe(app);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out_, err_);
      return code == 0 ? kExitOk : kExitConfig;
    }
    CLI::App* sub = app.get_subcommands().front();
    resolved_ = resolved_config(app, sub->get_name());
    try {
      action_();
      return kExitOk;
    } catch (const StageError& e) {
      err_ << "error: " << e.what() << '\n';
      return e.configuration() ? kExitConfig : kExitRuntime;
    } catch (const ConfigError& e) {
      err_ << "error: " << e.what() << '\n';
      return kExitConfig;
    } catch (const ValidationError& e) {
      err_ << "error: " << e.what() << '\n';
      return kExitConfig;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << '\n';
      return kExitRuntime;
    }
  }

 private:
  // Root options plus the active subcommand's set options, re-loadable with --config.
  static std::string resolved_config(const CLI::App& app, const std::string& sub) {
    std::stringstream in(app.config_to_str(true, false));
    std::string line, out;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      if (key == "config" || line.substr(eq + 1) == "\"\"") continue;
      if (key.find('.') == std::string::npos || key.rfind(sub + ".", 0) == 0) out += line + '\n';
    }
    return out;
  }

  void write_resolved(const fs::path& dir) const { std::ofstream(dir / "resolved_config.toml") << resolved_; }

  void begin_output(const fs::path& dir, bool force) const {
    studies::prepare_output_dir(dir, force);
    write_resolved(dir);
  }

  // ---- synth ---------------------------------------------------------------
  struct {
    std::string kind, source, out;
    std::optional<std::size_t> n, m;
    std::uint64_t seed = 0;
    PerturbationFlags perturb;
    bool force = false;
  } synth_;

  void setup_synth(CLI::App& app) {
    auto* c = app.add_subcommand("synth", "build a nominal/fabricated design dataset");
    c->add_option("--kind", synth_.kind, "airfoil or metasurface")->required()->check(CLI::IsMember({"airfoil", "metasurface"}));
    c->add_option("--n", synth_.n, "nominal designs (default 1528 airfoil, 1000 metasurface)");
    c->add_option("--m", synth_.m, "fabricated realisations per nominal (default 10)");
    c->add_option("--seed", synth_.seed, "base seed");
    c->add_option("--source", synth_.source, "airfoil coordinate file to take nominal designs from");
    synth_.perturb.add(c);
    c->add_option("--out", synth_.out, "dataset directory")->required();
    c->add_flag("--force", synth_.force, "replace an existing non-empty output directory");
    c->callback([this] { action_ = [this] { run_synth(); }; });
  }

  void run_synth() {
    const auto kind = parse_design_kind(synth_.kind);
    auto cfg = DatasetConfig::defaults(kind);
    if (synth_.n) cfg.n_nominal = *synth_.n;
    if (synth_.m) cfg.m_fabricated = *synth_.m;
    cfg.perturbation = synth_.perturb.resolve(kind);
    cfg.perturbation.seed = synth_.seed;
    if (!synth_.source.empty()) cfg.source = synth_.source;
    cfg.threads = threads_;
    cfg.validate();
    begin_output(synth_.out, synth_.force);
    const auto ds = build_dataset(cfg);
    save_dataset(ds, synth_.out);
    out_ << "wrote " << ds.n_nominal << " nominal and " << ds.n_nominal * ds.m_fabricated << " fabricated "
         << to_string(kind) << " designs to " << synth_.out << '\n';
  }

  // ---- train ---------------------------------------------------------------
  struct {
    std::string data, out;
    hgan::TrainConfig t;
    std::optional<std::size_t> steps, parent_dim, child_dim, noise_dim;
    bool force = false;
  } train_;

  void setup_train(CLI::App& app) {
    auto* c = app.add_subcommand("train", "train the hierarchical GAN on a dataset");
    c->add_option("--data", train_.data, "dataset directory")->required();
    c->add_option("--out", train_.out, "run directory")->required();
    c->add_option("--steps", train_.steps, "training steps (default 20000 airfoil, 50000 metasurface)");
    c->add_option("--batch", train_.t.batch_size, "batch size");
    c->add_option("--lr-g", train_.t.lr_g, "generator learning rate");
    c->add_option("--lr-d", train_.t.lr_d, "discriminator learning rate");
    c->add_option("--lambda", train_.t.lambda_info, "weight of the latent-code reconstruction term");
    c->add_option("--parent-dim", train_.parent_dim, "parent latent dimension");
    c->add_option("--child-dim", train_.child_dim, "child latent dimension");
    c->add_option("--noise-dim", train_.noise_dim, "noise dimension");
    c->add_option("--seed", train_.t.seed, "training seed");
    c->add_option("--checkpoint-every", train_.t.checkpoint_every, "snapshot interval in steps (0: final only)");
    c->add_flag("--force", train_.force, "replace an existing non-empty output directory");
    c->callback([this] { action_ = [this] { run_train(); }; });
  }

  void run_train() {
    const auto ds = load_dataset(train_.data);
    auto prior = hgan::PriorConfig::defaults(ds.kind);
    if (train_.parent_dim) prior.parent_dim = *train_.parent_dim;
    if (train_.child_dim) prior.child_dim = *train_.child_dim;
    if (train_.noise_dim) prior.noise_dim = *train_.noise_dim;
    prior.validate();
    auto t = train_.t;
    t.steps = train_.steps.value_or(hgan::TrainConfig::defaults(ds.kind).steps);
    t.validate();
    const fs::path dir = train_.out;
    begin_output(dir, train_.force);
    hgan::TrainHooks hooks;
    hooks.on_checkpoint = [&](const hgan::ModelCheckpoint& c) {
      if (c.step != t.steps) hgan::save_checkpoint(c, dir / ("checkpoint_step_" + std::to_string(c.step) + ".bin"));
    };
    hooks.on_step = [&](std::size_t step, double ld, double lg) {
      if (step % 500 == 0) err_ << "step " << step << " loss_d " << ld << " loss_g " << lg << '\n';
    };
    try {
      const auto ckpt = hgan::train(ds, t, prior, hooks);
      hgan::save_checkpoint(ckpt, dir / "checkpoint.bin");
      studies::write_loss_csv(ckpt.history, dir / "losses.csv");
      svg::save(svg::line_plot({{"discriminator", {}, ckpt.history.loss_d}, {"generator", {}, ckpt.history.loss_g}},
                               {"Training losses", "step", "loss"}),
                dir / "losses.svg");
      out_ << "trained " << t.steps << " steps; checkpoint at " << (dir / "checkpoint.bin").string() << '\n';
    } catch (const hgan::NonFiniteLossError& e) {
      hgan::save_checkpoint(e.last_good(), dir / "checkpoint_last_good.bin");
      throw;
    }
  }

  // ---- uq ------------------------------------------------------------------
  struct {
    std::string checkpoint, out;
    std::vector<double> parent;
    std::size_t samples = 100;
    double tau = 0.05;
    std::uint64_t seed = 0;
    bool sample_noise = false, force = false;
    ObjectiveFlags objective;
    PerturbationFlags perturb;
  } uq_;

  void setup_uq(CLI::App& app) {
    auto* c = app.add_subcommand("uq", "fabricated-performance quantile and Wasserstein report for one parent code");
    c->add_option("--checkpoint", uq_.checkpoint, "trained checkpoint")->required();
    c->add_option("--parent", uq_.parent, "parent code in [0,1]^d (default: drawn from --seed)");
    c->add_option("--samples", uq_.samples, "generator and ground-truth samples each");
    c->add_option("--tau", uq_.tau, "quantile level");
    c->add_option("--seed", uq_.seed, "sampling seed");
    c->add_flag("--sample-noise", uq_.sample_noise, "also draw the generator noise vector");
    uq_.objective.add(c);
    uq_.perturb.add(c);
    c->add_option("--out", uq_.out, "report directory")->required();
    c->add_flag("--force", uq_.force, "replace an existing non-empty output directory");
    c->callback([this] { action_ = [this] { run_uq(); }; });
  }

  void run_uq() {
    const auto ckpt = load_ckpt(uq_.checkpoint);
    const auto kind = ckpt->kind();
    const auto evaluator = uq_.objective.make(kind);
    const auto perturbation = uq_.perturb.resolve(kind);
    if (uq_.samples < 1) throw ConfigError("--samples must be >= 1");
    const auto parent = parent_or_random(uq_.parent, ckpt->prior().parent_dim, uq_.seed);
    const fs::path dir = uq_.out;
    begin_output(dir, uq_.force);

    const GeneratorModel model(ckpt, uq_.sample_noise);
    opt::RobustConfig rc;
    rc.mode = opt::RobustMode::Quantile;
    rc.tau = uq_.tau;
    rc.mc_samples = uq_.samples;
    rc.threads = threads_;
    Rng rng(derive_seed(uq_.seed, 1));
    const auto generated = opt::evaluate_design_objective(model, parent, *evaluator, rc, rng);
    auto truth = studies::ground_truth(model.nominal(parent), perturbation, *evaluator, uq_.samples, uq_.tau,
                                       derive_seed(uq_.seed, 2), threads_);
    std::vector<double> gen_ok, truth_ok;
    for (double v : generated.samples)
      if (std::isfinite(v)) gen_ok.push_back(v);
    for (double v : truth.samples)
      if (std::isfinite(v)) truth_ok.push_back(v);
    const double w1 = gen_ok.empty() || truth_ok.empty() ? std::nan("") : stats::wasserstein1(gen_ok, truth_ok);
    auto summarise = [&](const std::vector<double>& all, const std::vector<double>& ok) {
      return json{{"quantile", std::isfinite(stats::estimate_quantile(all, uq_.tau).value)
                                   ? json(stats::estimate_quantile(all, uq_.tau).value)
                                   : json(nullptr)},
                  {"mean", ok.empty() ? json(nullptr) : json(stats::mean(ok))},
                  {"std", ok.size() < 2 ? json(nullptr) : json(stats::stddev(ok))},
                  {"infeasible", all.size() - ok.size()}};
    };
    json report = {{"parent", parent},
                   {"tau", uq_.tau},
                   {"samples", uq_.samples},
                   {"nominal_score", truth.nominal_feasible ? json(truth.nominal) : json(nullptr)},
                   {"generator", summarise(generated.samples, gen_ok)},
                   {"ground_truth", summarise(truth.samples, truth_ok)},
                   {"wasserstein", std::isfinite(w1) ? json(w1) : json(nullptr)}};
    std::ofstream(dir / "uq.json") << report.dump(2) << '\n';
    std::ofstream csv(dir / "samples.csv");
    csv << "source,sample,feasible,value\n" << std::setprecision(17);
    auto rows = [&](const char* src, const std::vector<double>& v) {
      for (std::size_t k = 0; k < v.size(); ++k) {
        csv << src << ',' << k << ',' << (std::isfinite(v[k]) ? 1 : 0) << ',';
        if (std::isfinite(v[k])) csv << v[k];
        csv << '\n';
      }
    };
    rows("generator", generated.samples);
    rows("ground_truth", truth.samples);
    svg::save(svg::histogram({{"generator", {}, generated.samples}, {"ground truth", {}, truth.samples}},
                             {"Fabricated performance", "objective", "density"}, 30, uq_.tau),
              dir / "uq_histogram.svg");
    out_ << report.dump(2) << '\n';
  }

  // ---- optimize ------------------------------------------------------------
  struct {
    std::string checkpoint, out, mode = "quantile";
    std::optional<double> tau, k, c_star, alpha_star;
    std::optional<std::size_t> mc, n_init, n_seq;
    std::uint64_t seed = 0;
    std::size_t ground_truth_mc = 1000;
    bool crn = false, sample_noise = false, force = false;
    ObjectiveFlags objective;
    PerturbationFlags perturb;
  } opt_;

  void setup_optimize(CLI::App& app) {
    auto* c = app.add_subcommand("optimize", "Bayesian optimisation over the parent latent space");
    c->add_option("--checkpoint", opt_.checkpoint, "trained checkpoint")->required();
    c->add_option("--mode", opt_.mode, "nominal, quantile, mean_std or reliability")
        ->check(CLI::IsMember({"nominal", "quantile", "mean_std", "reliability"}));
    c->add_option("--tau", opt_.tau, "quantile level (default 0.05)");
    c->add_option("--k", opt_.k, "std multiplier for mean_std (default 1)");
    c->add_option("--c-star", opt_.c_star, "performance threshold for reliability");
    c->add_option("--alpha-star", opt_.alpha_star, "allowed failure probability for reliability (default 0.05)");
    c->add_option("--mc", opt_.mc, "fabricated samples per objective (default 100 airfoil, 20 metasurface)");
    c->add_option("--n-init", opt_.n_init, "initial Latin hypercube samples (default 21 airfoil, 15 metasurface)");
    c->add_option("--n-seq", opt_.n_seq, "sequential EI samples (default 119 airfoil, 85 metasurface)");
    c->add_option("--seed", opt_.seed, "optimisation seed");
    c->add_flag("--crn", opt_.crn, "reuse one fabrication stream for every parent code");
    c->add_flag("--sample-noise", opt_.sample_noise, "also draw the generator noise vector");
    c->add_option("--ground-truth-mc", opt_.ground_truth_mc, "ground-truth perturbations of the solution");
    opt_.objective.add(c);
    opt_.perturb.add(c);
    c->add_option("--out", opt_.out, "run directory")->required();
    c->add_flag("--force", opt_.force, "replace an existing non-empty output directory");
    c->callback([this] { action_ = [this] { run_optimize(); }; });
  }

  void run_optimize() {
    const auto ckpt = load_ckpt(opt_.checkpoint);
    const auto kind = ckpt->kind();
    auto cfg = opt::BoConfig::defaults(kind, opt::parse_robust_mode(opt_.mode));
    cfg.seed = opt_.seed;
    if (opt_.tau) cfg.robust.tau = *opt_.tau;
    if (opt_.k) cfg.robust.k = *opt_.k;
    if (opt_.c_star) cfg.robust.c_star = *opt_.c_star;
    if (opt_.alpha_star) cfg.robust.alpha_star = *opt_.alpha_star;
    if (opt_.mc) cfg.robust.mc_samples = *opt_.mc;
    if (opt_.n_init) cfg.budget.n_init = *opt_.n_init;
    if (opt_.n_seq) cfg.budget.n_seq = *opt_.n_seq;
    if (cfg.robust.mode == opt::RobustMode::Reliability && !opt_.c_star) {
      throw ConfigError("--mode reliability needs --c-star");
    }
    cfg.robust.common_random_numbers = opt_.crn;
    cfg.robust.sample_noise = opt_.sample_noise;
    cfg.robust.threads = threads_;
    cfg.validate();
    const auto evaluator = opt_.objective.make(kind);
    const auto perturbation = opt_.perturb.resolve(kind);
    if (opt_.ground_truth_mc < 1) throw ConfigError("--ground-truth-mc must be >= 1");
    const fs::path dir = opt_.out;
    begin_output(dir, opt_.force);
    const GeneratorModel model(ckpt, opt_.sample_noise);
    const auto run = studies::optimize_and_report(model, *evaluator, cfg, perturbation, opt_.ground_truth_mc,
                                                  derive_seed(opt_.seed, 5), dir);
    studies::write_comparison_csv({run.truth}, cfg.robust.tau, dir / "comparison.csv");
    out_ << "best objective " << run.trace.best_value << " at parent [";
    for (std::size_t j = 0; j < run.trace.best_parent.size(); ++j) out_ << (j ? ", " : "") << run.trace.best_parent[j];
    out_ << "]; ground truth nominal " << run.truth.nominal << ", " << cfg.robust.tau << "-quantile "
         << run.truth.quantile << '\n';
  }

  // ---- study ---------------------------------------------------------------
  struct {
    std::string data, out;
    std::vector<std::string> checkpoints;
    uq::StudyProtocol protocol;
    bool force = false;
    ObjectiveFlags objective;
  } study_;

  void setup_study(CLI::App& app) {
    auto* c = app.add_subcommand("study", "fitting-error and Wasserstein parametric study");
    c->add_option("--data", study_.data, "dataset directory (fitting targets)")->required();
    c->add_option("--checkpoint", study_.checkpoints, "checkpoints to compare (repeatable)")->required();
    c->add_option("--targets", study_.protocol.fit_targets, "fitting targets per checkpoint");
    c->add_option("--fabrications", study_.protocol.fabrications, "fabrications per nominal for Wasserstein");
    c->add_option("--nominals", study_.protocol.nominals, "random nominal designs per checkpoint");
    c->add_option("--restarts", study_.protocol.fit_restarts, "fitting restarts (0: three times the parent dim)");
    c->add_option("--seed", study_.protocol.seed, "study seed");
    study_.objective.add(c);
    c->add_option("--out", study_.out, "report directory")->required();
    c->add_flag("--force", study_.force, "replace an existing non-empty output directory");
    c->callback([this] { action_ = [this] { run_study(); }; });
  }

  void run_study() {
    const auto ds = load_dataset(study_.data);
    std::vector<std::shared_ptr<hgan::ModelCheckpoint>> owned;
    std::vector<const hgan::ModelCheckpoint*> ckpts;
    for (const auto& p : study_.checkpoints) {
      owned.push_back(load_ckpt(p));
      if (owned.back()->kind() != ds.kind) throw ConfigError(p + " was trained on a different design kind");
      ckpts.push_back(owned.back().get());
    }
    const auto evaluator = study_.objective.make(ds.kind);
    auto protocol = study_.protocol;
    protocol.threads = threads_;
    const fs::path dir = study_.out;
    begin_output(dir, study_.force);
    const auto rows = uq::parametric_study(ckpts, ds, *evaluator, protocol);
    uq::write_study_csv(rows, dir / "study.csv");
    out_ << "wrote " << rows.size() << " rows to " << (dir / "study.csv").string() << '\n';
  }

  // ---- plot ----------------------------------------------------------------
  struct {
    std::vector<std::string> runs, labels;
    std::string out;
    double tau = 0.05;
    std::size_t bins = 30;
    bool force = false;
  } plot_;

  void setup_plot(CLI::App& app) {
    auto* c = app.add_subcommand("plot", "SVG histograms and convergence curves from optimize runs");
    c->add_option("--run", plot_.runs, "optimize output directory (repeatable)")->required();
    c->add_option("--label", plot_.labels, "legend label per run (default: directory name)");
    c->add_option("--tau", plot_.tau, "quantile marked on the histograms");
    c->add_option("--bins", plot_.bins, "histogram bins");
    c->add_option("--out", plot_.out, "plot directory")->required();
    c->add_flag("--force", plot_.force, "replace an existing non-empty output directory");
    c->callback([this] { action_ = [this] { run_plot(); }; });
  }

  void run_plot() {
    if (!plot_.labels.empty() && plot_.labels.size() != plot_.runs.size()) {
      throw ConfigError("give one --label per --run");
    }
    std::vector<svg::Series> hist, conv;
    for (std::size_t i = 0; i < plot_.runs.size(); ++i) {
      const fs::path run = plot_.runs[i];
      const std::string label = plot_.labels.empty() ? run.filename().string() : plot_.labels[i];
      auto values = read_csv_column(run / "ground_truth.csv", "value");
      for (auto& v : values)
        if (std::isnan(v)) v = -std::numeric_limits<double>::infinity();
      hist.push_back({label, {}, values});
      conv.push_back({label, {}, read_csv_column(run / "trace.csv", "incumbent")});
    }
    const fs::path dir = plot_.out;
    begin_output(dir, plot_.force);
    svg::save(svg::histogram(hist, {"Ground-truth performance of fabricated solutions", "objective", "density"},
                             plot_.bins, plot_.tau),
              dir / "fabricated_performance.svg");
    svg::save(svg::line_plot(conv, {"Optimisation convergence", "evaluation", "best objective so far"}),
              dir / "convergence.svg");
    out_ << "wrote plots to " << dir.string() << '\n';
  }

  // ---- fixture-verify --------------------------------------------------------
  struct {
    std::size_t mc = 10000;
    double tau = 0.05;
    std::uint64_t seed = 0;
    std::string out;
  } fixture_;

  void setup_fixture(CLI::App& app) {
    auto* c = app.add_subcommand("fixture-verify", "re-derive the fragile/robust airfoil fixture values");
    c->add_option("--mc", fixture_.mc, "perturbations per fixture design");
    c->add_option("--tau", fixture_.tau, "quantile level");
    c->add_option("--seed", fixture_.seed, "perturbation seed");
    c->add_option("--out", fixture_.out, "optional JSON report path");
    c->callback([this] { action_ = [this] { run_fixture(); }; });
  }

  void run_fixture() {
    if (fixture_.mc < 1) throw ConfigError("--mc must be >= 1");
    const objectives::RobustnessFixture fixture;
    const auto r = objectives::verify_fixture(fixture, {}, fixture_.mc, fixture_.tau, fixture_.seed);
    auto row = [&](const char* name, const geometry::AirfoilParams& p, const objectives::FixtureSummary& s) {
      out_ << std::left << std::setw(8) << name << " t=" << p.thickness << "  nominal " << std::setw(10) << s.nominal
           << " q" << fixture_.tau << " " << std::setw(10) << s.quantile << " mean " << std::setw(10) << s.mean
           << " infeasible " << s.infeasible << '\n';
    };
    row("fragile", fixture.fragile, r.fragile);
    row("robust", fixture.robust, r.robust);
    const bool ok = r.gap_holds();
    out_ << (ok ? "PASS" : "FAIL") << ": fragile wins nominally and loses on the " << fixture_.tau << "-quantile\n";
    if (!fixture_.out.empty()) {
      auto summary = [](const objectives::FixtureSummary& s) {
        return json{{"nominal", s.nominal}, {"quantile", s.quantile}, {"mean", s.mean}, {"infeasible", s.infeasible}};
      };
      std::ofstream f(fixture_.out);
      if (!f) throw IoError("cannot write " + fixture_.out);
      f << json{{"mc_samples", r.mc_samples},
                {"tau", r.tau},
                {"seed", fixture_.seed},
                {"fragile", summary(r.fragile)},
                {"robust", summary(r.robust)},
                {"gap_holds", ok}}
               .dump(2)
        << '\n';
    }
    if (!ok) throw Error("fixture ordering does not hold");
  }

  // ---- recipe ----------------------------------------------------------------
  struct {
    std::string name, out;
    std::uint64_t seed = 0;
    bool force = false;
  } recipe_;

  void setup_recipe(CLI::App& app) {
    auto* c = app.add_subcommand("recipe", "run synth, train, study, optimize and plot end to end");
    c->add_option("--name", recipe_.name, "airfoil_small, airfoil_paper, metasurface_small or metasurface_paper")
        ->required()
        ->check(CLI::IsMember(studies::recipe_names()));
    c->add_option("--seed", recipe_.seed, "recipe seed");
    c->add_option("--out", recipe_.out, "report directory")->required();
    c->add_flag("--force", recipe_.force, "replace an existing non-empty output directory");
    c->callback([this] { action_ = [this] { run_recipe(); }; });
  }

  void run_recipe() {
    const auto recipe = studies::make_recipe(recipe_.name, recipe_.seed);
    studies::RunOptions opts;
    opts.force = recipe_.force;
    opts.threads = threads_;
    opts.log = &err_;
    const auto report = studies::run_recipe(recipe, recipe_.out, opts);
    write_resolved(recipe_.out);
    out_ << std::setprecision(6) << "standard: nominal " << report.nominal.nominal << ", quantile "
         << report.nominal.quantile << "\nrobust:   nominal " << report.robust.nominal << ", quantile "
         << report.robust.quantile << "\nreport in " << recipe_.out << '\n';
  }

  std::ostream& out_;
  std::ostream& err_;
  unsigned threads_ = 1;
  std::string resolved_;
  std::function<void()> action_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Runner runner(out, err);
  return runner.main(args);
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace ganduf::cli
