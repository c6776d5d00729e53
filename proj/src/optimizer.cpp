#include "ganduf/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "ganduf/parallel.hpp"
#include "ganduf/stats.hpp"

namespace ganduf::opt {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stream labels for derive_seed.
constexpr std::uint64_t kLhsStream = 1, kGpStream = 2, kEiStream = 3, kEvalStream = 10;

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string to_string(RobustMode mode) {
  switch (mode) {
    case RobustMode::Nominal: return "nominal";
    case RobustMode::Quantile: return "quantile";
    case RobustMode::MeanStd: return "mean_std";
    case RobustMode::Reliability: return "reliability";
  }
  return "?";
}

RobustMode parse_robust_mode(const std::string& text) {
  if (text == "nominal") return RobustMode::Nominal;
  if (text == "quantile") return RobustMode::Quantile;
  if (text == "mean_std") return RobustMode::MeanStd;
  if (text == "reliability") return RobustMode::Reliability;
  throw ConfigError("unknown robust mode '" + text + "' (expected nominal, quantile, mean_std or reliability)");
}

RobustConfig RobustConfig::defaults(DesignKind kind, RobustMode mode) {
  RobustConfig c;
  c.mode = mode;
  c.mc_samples = kind == DesignKind::Airfoil ? 100 : 20;
  return c;
}

void RobustConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (mode != RobustMode::Nominal && mc_samples < 1) throw ConfigError("mc_samples must be >= 1 for robust modes");
  if (!(alpha_star >= 0.0 && alpha_star <= 1.0)) throw ConfigError("alpha_star must lie in [0, 1]");
  if (!std::isfinite(k) || !std::isfinite(c_star)) throw ConfigError("k and c_star must be finite");
}

json RobustConfig::to_json() const {
  return {{"mode", to_string(mode)},         {"tau", tau},
          {"k", k},                          {"mc_samples", mc_samples},
          {"c_star", c_star},                {"alpha_star", alpha_star},
          {"common_random_numbers", common_random_numbers}, {"sample_noise", sample_noise}};
}

BoConfig BoConfig::defaults(DesignKind kind, RobustMode mode) {
  BoConfig c;
  c.robust = RobustConfig::defaults(kind, mode);
  c.budget = kind == DesignKind::Airfoil ? Budget{21, 119} : Budget{15, 85};
  return c;
}

void BoConfig::validate() const {
  if (budget.n_init < 2) throw ConfigError("BO needs at least 2 initial samples");
  robust.validate();
}

json BoConfig::to_json() const {
  json g = {{"restarts", gp.restarts}, {"max_iterations", gp.max_iterations}};
  if (gp.fixed_noise) g["fixed_noise"] = *gp.fixed_noise;
  return {{"n_init", budget.n_init}, {"n_seq", budget.n_seq},      {"robust", robust.to_json()},
          {"gp", g},                 {"seed", seed},               {"ei_restarts", ei_restarts},
          {"ei_iterations", ei_iterations}};
}

// ---------------------------------------------------------------------------

ObjectiveEstimate evaluate_design_objective(const DesignModel& model, std::span<const double> parent,
                                            const objectives::ObjectiveEvaluator& evaluator, const RobustConfig& cfg,
                                            Rng& rng) {
  cfg.validate();
  ObjectiveEstimate out;
  if (cfg.mode == RobustMode::Nominal) {
    const auto e = evaluator.evaluate(model.nominal(parent));
    out.value = e.value;
    out.feasible = e.feasible;
    out.note = e.reason;
    return out;
  }
  const auto designs = model.fabricated(parent, cfg.mc_samples, rng);
  std::vector<objectives::Evaluation> evals(designs.size());
  parallel_for(designs.size(), cfg.threads, [&](std::size_t i) { evals[i] = evaluator.evaluate(designs[i]); });
  std::vector<double> finite;
  out.samples.resize(evals.size());
  for (std::size_t i = 0; i < evals.size(); ++i) {
    out.samples[i] = evals[i].feasible ? evals[i].value : -kInf;
    if (evals[i].feasible) finite.push_back(evals[i].value);
  }
  if (finite.empty() && cfg.mode != RobustMode::Reliability) {
    out.feasible = false;
    out.note = "every fabricated sample was infeasible";
    return out;
  }
  switch (cfg.mode) {
    case RobustMode::Quantile:
      out.value = stats::estimate_quantile(out.samples, cfg.tau).value;
      if (!std::isfinite(out.value)) {
        out.feasible = false;
        out.note = "tau-quantile falls on infeasible samples";
      }
      break;
    case RobustMode::MeanStd:
      out.value = stats::mean(finite) - cfg.k * stats::stddev(finite);
      break;
    case RobustMode::Reliability: {
      const auto ok = std::count_if(out.samples.begin(), out.samples.end(), [&](double v) { return v >= cfg.c_star; });
      out.value = static_cast<double>(ok) / static_cast<double>(out.samples.size());
      out.feasible = 1.0 - out.value <= cfg.alpha_star;
      if (!out.feasible) out.note = "failure probability above alpha_star";
      break;
    }
    case RobustMode::Nominal: break;
  }
  return out;
}

// ---------------------------------------------------------------------------

EiMaximum maximize_ei(const gp::GaussianProcess& model, double best, std::size_t dim, std::size_t restarts,
                      std::size_t iterations, Rng& rng) {
  EiMaximum top{std::vector<double>(dim, 0.5), -1.0};
  auto ei_at = [&](const std::vector<double>& x) {
    const auto p = model.predict_with_gradient(x);
    const auto e = gp::expected_improvement_gradient(p.mean, p.std, best);
    std::vector<double> g(dim);
    for (std::size_t j = 0; j < dim; ++j) g[j] = e.d_mean * p.d_mean[j] + e.d_std * p.d_std[j];
    return std::make_pair(e.value, g);
  };
  for (std::size_t r = 0; r < restarts; ++r) {
    std::vector<double> x = rng.uniform_vector(dim);
    auto [value, grad] = ei_at(x);
    double step = -1.0;
    for (std::size_t it = 0; it < iterations; ++it) {
      double gmax = 0.0;
      for (double g : grad) gmax = std::max(gmax, std::abs(g));
      if (gmax == 0.0) break;
      if (step < 0.0) step = 0.1 / gmax;
      bool accepted = false;
      for (int halving = 0; halving < 30; ++halving) {
        std::vector<double> cand(dim);
        double ascent = 0.0, moved = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          cand[j] = std::clamp(x[j] + step * grad[j], 0.0, 1.0);
          ascent += grad[j] * (cand[j] - x[j]);
          moved = std::max(moved, std::abs(cand[j] - x[j]));
        }
        if (moved < 1e-12) break;
        auto [cv, cg] = ei_at(cand);
        if (cv >= value + 1e-4 * ascent) {
          accepted = cv > value * (1.0 + 1e-12) || cv - value > 1e-300;
          x = std::move(cand);
          value = cv;
          grad = std::move(cg);
          step *= 2.0;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
    }
    if (value > top.value) top = {x, value};
  }
  return top;
}

BoTrace bayes_optimize(std::size_t dim, const ObjectiveFn& objective, const BoConfig& cfg) {
  cfg.validate();
  if (dim < 1) throw ConfigError("BO needs dimension >= 1");
  const auto start = std::chrono::steady_clock::now();
  BoTrace trace;
  trace.seed = cfg.seed;
  trace.config = cfg.to_json();

  auto evaluate = [&](std::size_t iteration, const std::string& phase, std::vector<double> x, double acquisition) {
    Rng rng(cfg.robust.common_random_numbers ? derive_seed(cfg.seed, kEvalStream)
                                             : derive_seed(cfg.seed, kEvalStream, iteration));
    const auto est = objective(x, rng);
    BoRecord rec;
    rec.iteration = iteration;
    rec.phase = phase;
    rec.parent = std::move(x);
    rec.objective = est.value;
    rec.feasible = est.feasible && std::isfinite(est.value);
    rec.mc_samples = est.samples;
    rec.acquisition = acquisition;
    if (rec.feasible && (!trace.has_solution || rec.objective > trace.best_value)) {
      trace.has_solution = true;
      trace.best_value = rec.objective;
      trace.best_parent = rec.parent;
    }
    rec.has_incumbent = trace.has_solution;
    rec.incumbent = trace.best_value;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    trace.records.push_back(std::move(rec));
  };

  auto refresh_targets = [&] {
    std::vector<double> feasible;
    for (const auto& r : trace.records)
      if (r.feasible) feasible.push_back(r.objective);
    const double floor = feasible.empty() ? 0.0 : *std::min_element(feasible.begin(), feasible.end());
    const double spread = feasible.size() >= 2 ? stats::stddev(feasible) : 1.0;
    const double penalty = floor - (spread > 0.0 ? spread : 1.0);
    for (auto& r : trace.records) r.surrogate_target = r.feasible ? r.objective : penalty;
  };

  Rng lhs_rng(derive_seed(cfg.seed, kLhsStream));
  const auto init = gp::lhs(cfg.budget.n_init, dim, lhs_rng);
  for (std::size_t i = 0; i < init.size(); ++i) evaluate(i, "lhs", init[i], 0.0);
  refresh_targets();

  std::optional<gp::Hyperparameters> warm;
  const std::size_t restarts = cfg.ei_restarts ? cfg.ei_restarts : 10 * dim;
  for (std::size_t s = 0; s < cfg.budget.n_seq; ++s) {
    const std::size_t iteration = cfg.budget.n_init + s;
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (const auto& r : trace.records) {
      x.push_back(r.parent);
      y.push_back(r.surrogate_target);
    }
    gp::GaussianProcess model;
    Rng gp_rng(derive_seed(cfg.seed, kGpStream, iteration));
    model.fit(x, y, cfg.gp, gp_rng, warm);
    warm = model.hyperparameters();
    const double best = *std::max_element(y.begin(), y.end());
    Rng ei_rng(derive_seed(cfg.seed, kEiStream, iteration));
    const auto next = maximize_ei(model, best, dim, restarts, cfg.ei_iterations, ei_rng);
    evaluate(iteration, "ei", next.point, next.value);
    refresh_targets();
  }
  return trace;
}

BoTrace bayes_optimize(const DesignModel& model, const objectives::ObjectiveEvaluator& evaluator, const BoConfig& cfg) {
  if (model.kind() != evaluator.kind()) throw ConfigError("objective evaluator kind does not match the design model");
  auto trace = bayes_optimize(
      model.parent_dim(),
      [&](const std::vector<double>& parent, Rng& rng) {
        return evaluate_design_objective(model, parent, evaluator, cfg.robust, rng);
      },
      cfg);
  trace.config["objective"] = evaluator.describe();
  return trace;
}

// ---------------------------------------------------------------------------

void write_trace_jsonl(const BoTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : trace.records) {
    json samples = json::array();
    for (double v : r.mc_samples) samples.push_back(finite_or_null(v));
    json j = {{"iteration", r.iteration},
              {"phase", r.phase},
              {"parent", r.parent},
              {"objective", r.feasible ? finite_or_null(r.objective) : json(nullptr)},
              {"feasible", r.feasible},
              {"surrogate_target", r.surrogate_target},
              {"acquisition", r.acquisition},
              {"incumbent", r.has_incumbent ? json(r.incumbent) : json(nullptr)},
              {"mc_samples", samples},
              {"wall_seconds", r.wall_seconds}};
    out << j.dump() << '\n';
  }
}

void write_trace_summary(const BoTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  json j = {{"seed", trace.seed},
            {"config", trace.config},
            {"evaluations", trace.records.size()},
            {"has_solution", trace.has_solution},
            {"best_parent", trace.best_parent},
            {"best_value", trace.has_solution ? json(trace.best_value) : json(nullptr)},
            {"wall_seconds", trace.records.empty() ? 0.0 : trace.records.back().wall_seconds}};
  out << j.dump(2) << '\n';
}

void write_trace_csv(const BoTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t dim = trace.records.empty() ? 0 : trace.records.front().parent.size();
  out << "iteration,phase,feasible,objective,surrogate_target,acquisition,incumbent";
  for (std::size_t j = 0; j < dim; ++j) out << ",parent_" << j;
  out << '\n' << std::setprecision(17);
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << r.phase << ',' << (r.feasible ? 1 : 0) << ',';
    if (r.feasible) out << r.objective;
    out << ',' << r.surrogate_target << ',' << r.acquisition << ',';
    if (r.has_incumbent) out << r.incumbent;
    for (double v : r.parent) out << ',' << v;
    out << '\n';
  }
}

}  // namespace ganduf::opt
