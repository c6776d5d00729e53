#include "ganduf/uq.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "ganduf/parallel.hpp"

namespace ganduf::uq {

using ad::Tensor;

std::vector<Design> sample_fabricated(const hgan::ModelCheckpoint& ckpt, std::span<const double> parent, std::size_t n,
                                      Rng& rng, bool sample_noise) {
  const auto& prior = ckpt.prior();
  if (parent.size() != prior.parent_dim) throw DimensionError("parent code does not match the checkpoint priors");
  if (n == 0) return {};
  const double sd = std::sqrt(hgan::PriorConfig::kVariance);
  std::vector<hgan::LatentSample> samples(n);
  for (auto& s : samples) {
    s.parent.assign(parent.begin(), parent.end());
    s.child = rng.normal_vector(prior.child_dim, sd);
    s.noise = sample_noise ? rng.normal_vector(prior.noise_dim, sd) : std::vector<double>(prior.noise_dim, 0.0);
  }
  return hgan::generate(ckpt, samples);
}

namespace {

/// Squared distance of G(c, 0, 0) to the target for each row of `codes`,
/// with per-row gradients when requested.
struct BatchEval {
  std::vector<double> value;
  std::vector<std::vector<double>> grad;
};

BatchEval evaluate_rows(const hgan::Model& model, const Tensor& target,
                        const std::vector<std::vector<double>>& codes, bool with_grad) {
  const auto& prior = model.prior();
  const std::size_t rows = codes.size(), in = prior.input_dim();
  std::vector<double> latent(rows * in, 0.0);
  for (std::size_t r = 0; r < rows; ++r) std::copy(codes[r].begin(), codes[r].end(), latent.begin() + static_cast<std::ptrdiff_t>(r * in));
  BatchEval out;
  if (!with_grad) {
    ad::NoGradGuard no_grad;
    const Tensor loss = ad::sum(ad::square(model.generate(Tensor::from({rows, in}, latent)) - target), 1);
    out.value.assign(loss.data().begin(), loss.data().end());
    return out;
  }
  Tensor x = Tensor::from({rows, in}, std::move(latent), true);
  const Tensor loss = ad::sum(ad::square(model.generate(x) - target), 1);
  out.value.assign(loss.data().begin(), loss.data().end());
  ad::backward(ad::sum(loss));
  out.grad.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    out.grad[r].assign(x.grad().begin() + static_cast<std::ptrdiff_t>(r * in),
                       x.grad().begin() + static_cast<std::ptrdiff_t>(r * in + prior.parent_dim));
  }
  return out;
}

}  // namespace

FitResult fit_nominal(const hgan::ModelCheckpoint& ckpt, const Design& target, const FitConfig& cfg) {
  if (target.kind != ckpt.kind()) throw DimensionError("fit target kind does not match the checkpoint");
  target.check();
  const std::size_t d = ckpt.prior().parent_dim;
  const std::size_t restarts = cfg.restarts ? cfg.restarts : 3 * d;
  const Tensor t = Tensor::from({1, target.values.size()}, target.values);
  // Private frozen copy: gradients flow to the codes only, and concurrent fits
  // never touch shared parameter state.
  hgan::Model model = ckpt.model.clone();
  for (auto& p : model.generator_params().tensors()) p.set_requires_grad(false);

  std::vector<std::vector<double>> code(restarts);
  for (std::size_t k = 0; k < restarts; ++k) {
    Rng rng(derive_seed(cfg.seed, k));
    code[k] = rng.uniform_vector(d);
  }
  FitResult res;
  res.target = target;
  res.restarts = restarts;
  std::vector<double> f(restarts), step(restarts, 1.0);
  std::vector<std::vector<double>> grad(restarts);
  std::vector<bool> active(restarts, true);
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](double value, const std::vector<double>& c) {
    if (value < best) {
      best = value;
      res.parent = c;
    }
  };

  for (std::size_t it = 0; it <= cfg.max_iterations; ++it) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < restarts; ++k)
      if (active[k]) idx.push_back(k);
    if (idx.empty()) break;
    std::vector<std::vector<double>> batch;
    for (auto k : idx) batch.push_back(code[k]);
    const auto ev = evaluate_rows(model, t, batch, true);
    res.evaluations += idx.size();
    for (std::size_t a = 0; a < idx.size(); ++a) {
      f[idx[a]] = ev.value[a];
      grad[idx[a]] = ev.grad[a];
      consider(ev.value[a], code[idx[a]]);
    }
    if (it == 0) {
      // Starting-point error of the best start, for reporting.
      res.initial_error = std::sqrt(*std::min_element(f.begin(), f.end()));
    }
    if (it == cfg.max_iterations) break;

    // Backtracking line search, all pending rows evaluated together.
    std::vector<std::size_t> pending = idx;
    for (int halving = 0; halving < 40 && !pending.empty(); ++halving) {
      std::vector<std::vector<double>> cand;
      std::vector<std::size_t> moving;
      for (auto k : pending) {
        std::vector<double> c(d);
        double moved = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          c[j] = std::clamp(code[k][j] - step[k] * grad[k][j], 0.0, 1.0);
          moved = std::max(moved, std::abs(c[j] - code[k][j]));
        }
        if (moved < 1e-12) {
          active[k] = false;  // projected-gradient stationary point
          continue;
        }
        cand.push_back(std::move(c));
        moving.push_back(k);
      }
      if (moving.empty()) break;
      const auto ev = evaluate_rows(model, t, cand, false);
      res.evaluations += moving.size();
      std::vector<std::size_t> retry;
      for (std::size_t a = 0; a < moving.size(); ++a) {
        const auto k = moving[a];
        consider(ev.value[a], cand[a]);
        double decrease = 0.0;
        for (std::size_t j = 0; j < d; ++j) decrease += grad[k][j] * (cand[a][j] - code[k][j]);
        if (ev.value[a] <= f[k] + 1e-4 * decrease) {
          const double rel = std::abs(f[k] - ev.value[a]) / std::max(f[k], 1e-300);
          code[k] = cand[a];
          step[k] *= 2.0;
          if (rel < 1e-12) active[k] = false;
        } else {
          step[k] *= 0.5;
          retry.push_back(k);
        }
      }
      pending = std::move(retry);
    }
    for (auto k : pending) active[k] = false;  // line search exhausted
  }
  res.fitting_error = std::sqrt(best);
  return res;
}

// ---------------------------------------------------------------------------

nlohmann::json StudyProtocol::to_json() const {
  return {{"fit_targets", fit_targets}, {"fabrications", fabrications}, {"nominals", nominals},
          {"fit_restarts", fit_restarts}, {"seed", seed}};
}

std::vector<StudyRow> fitting_study(const std::vector<const hgan::ModelCheckpoint*>& ckpts, const DesignDataset& dataset,
                                    const StudyProtocol& protocol) {
  std::vector<StudyRow> rows;
  Rng pick(derive_seed(protocol.seed, 1));
  std::vector<std::size_t> targets(protocol.fit_targets);
  for (auto& t : targets) t = pick.index(dataset.n_nominal);
  for (std::size_t c = 0; c < ckpts.size(); ++c) {
    const auto& ckpt = *ckpts[c];
    std::vector<double> errors(targets.size());
    parallel_for(targets.size(), protocol.threads, [&](std::size_t r) {
      const auto target = ckpt.normalization.normalize(dataset.nominal_design(targets[r]));
      FitConfig fc;
      fc.restarts = protocol.fit_restarts;
      fc.seed = derive_seed(protocol.seed, 2, c, r);
      errors[r] = fit_nominal(ckpt, target, fc).fitting_error;
    });
    for (std::size_t r = 0; r < errors.size(); ++r) rows.push_back({"fitting_error", ckpt.prior().parent_dim, r, errors[r]});
  }
  return rows;
}

std::vector<StudyRow> wasserstein_study(const std::vector<const hgan::ModelCheckpoint*>& ckpts,
                                        const objectives::ObjectiveEvaluator& evaluator,
                                        const geometry::PerturbationConfig& perturbation, const StudyProtocol& protocol) {
  std::vector<StudyRow> rows;
  for (std::size_t c = 0; c < ckpts.size(); ++c) {
    auto shared = std::shared_ptr<const hgan::ModelCheckpoint>(ckpts[c], [](const hgan::ModelCheckpoint*) {});
    const GeneratorModel model(shared);
    std::vector<double> distances(protocol.nominals);
    parallel_for(protocol.nominals, protocol.threads, [&](std::size_t r) {
      Rng rng(derive_seed(protocol.seed, 3, c, r));
      const auto parent = rng.uniform_vector(model.parent_dim());
      const auto nominal = model.nominal(parent);
      std::vector<double> truth, generated;
      for (std::size_t k = 0; k < protocol.fabrications; ++k) {
        const auto e = evaluator.evaluate(fabricate(nominal, perturbation, rng));
        if (e.feasible) truth.push_back(e.value);
      }
      for (const auto& fab : model.fabricated(parent, protocol.fabrications, rng)) {
        const auto e = evaluator.evaluate(fab);
        if (e.feasible) generated.push_back(e.value);
      }
      distances[r] = truth.empty() || generated.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                        : wasserstein1(truth, generated);
    });
    for (std::size_t r = 0; r < distances.size(); ++r) rows.push_back({"wasserstein", ckpts[c]->prior().child_dim, r, distances[r]});
  }
  return rows;
}

std::vector<StudyRow> parametric_study(const std::vector<const hgan::ModelCheckpoint*>& ckpts,
                                       const DesignDataset& dataset, const objectives::ObjectiveEvaluator& evaluator,
                                       const StudyProtocol& protocol) {
  auto rows = fitting_study(ckpts, dataset, protocol);
  geometry::PerturbationConfig pert{dataset.manifest.at("perturbation").at("noise_std").get<double>(),
                                    dataset.manifest.at("perturbation").at("filter_std").get<double>(), 0};
  auto w = wasserstein_study(ckpts, evaluator, pert, protocol);
  rows.insert(rows.end(), w.begin(), w.end());
  return rows;
}

void write_study_csv(const std::vector<StudyRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "study_kind,dim_setting,replicate_id,metric_value\n" << std::setprecision(17);
  for (const auto& r : rows) out << r.study_kind << ',' << r.dim_setting << ',' << r.replicate_id << ',' << r.metric_value << '\n';
}

}  // namespace ganduf::uq
