#include <cmath>
#include <sstream>

#include "ganduf/hgan.hpp"

namespace ganduf::hgan {

using ad::Tensor;

namespace {

Tensor gather(const std::vector<double>& source, std::size_t dsz, const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  out.reserve(rows.size() * dsz);
  for (auto r : rows) out.insert(out.end(), source.begin() + static_cast<std::ptrdiff_t>(r * dsz),
                                 source.begin() + static_cast<std::ptrdiff_t>((r + 1) * dsz));
  return Tensor::from({rows.size(), dsz}, std::move(out));
}

Tensor code_matrix(const std::vector<LatentSample>& samples, const PriorConfig& prior) {
  std::vector<double> v;
  v.reserve(samples.size() * prior.code_dim());
  for (const auto& s : samples) {
    v.insert(v.end(), s.parent.begin(), s.parent.end());
    v.insert(v.end(), s.child.begin(), s.child.end());
  }
  return Tensor::from({samples.size(), prior.code_dim()}, std::move(v));
}

std::vector<LatentSample> draw(const PriorConfig& prior, std::size_t n, Rng& rng) {
  std::vector<LatentSample> s(n);
  for (auto& x : s) x = sample_latent(prior, rng);
  return s;
}

void set_trainable(nn::ParameterSet& params, bool on) {
  for (auto& t : params.tensors()) t.set_requires_grad(on);
}

}  // namespace

ModelCheckpoint ModelCheckpoint::clone() const {
  ModelCheckpoint c = *this;
  c.model = model.clone();
  return c;
}

ModelCheckpoint initial_checkpoint(const DesignDataset& dataset, const TrainConfig& train, const PriorConfig& prior) {
  train.validate();
  prior.validate();
  ModelCheckpoint c;
  c.model = Model(dataset.kind, prior, derive_seed(train.seed, 0));
  c.train = train;
  c.normalization = dataset.normalization;
  return c;
}

ModelCheckpoint train(const DesignDataset& dataset, const TrainConfig& cfg, const PriorConfig& prior,
                      const TrainHooks& hooks) {
  ModelCheckpoint ckpt = initial_checkpoint(dataset, cfg, prior);
  Model& model = ckpt.model;
  const std::size_t dsz = dataset.design_size();
  const auto nominal = dataset.normalization.normalize(dataset.nominal);
  const auto fabricated = dataset.normalization.normalize(dataset.fabricated);

  Rng rng(derive_seed(cfg.seed, 1));
  AdamState opt_d(cfg.lr_d, 0.5, 0.999, 1e-8);
  AdamState opt_g(cfg.lr_g, 0.5, 0.999, 1e-8);
  auto last_good = std::make_shared<const ModelCheckpoint>(ckpt.clone());

  auto& g_params = model.generator_params().tensors();
  auto& d_params = model.discriminator_params().tensors();

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const auto pairs = sample_pairs(dataset, cfg.batch_size, rng);
    std::vector<std::size_t> nom_rows, fab_rows;
    for (const auto& p : pairs) {
      nom_rows.push_back(p.nominal);
      fab_rows.push_back(p.nominal * dataset.m_fabricated + p.fabricated);
    }
    const Tensor x_nom = gather(nominal, dsz, nom_rows);
    const Tensor x_fab = gather(fabricated, dsz, fab_rows);

    // Discriminator (and Q) update on real pairs and detached fakes.
    const auto d_latents = draw(prior, cfg.batch_size, rng);
    Tensor fake_nom, fake_fab;
    {
      ad::NoGradGuard no_grad;
      fake_nom = model.generate(latent_matrix(d_latents, prior, true));
      fake_fab = model.generate(latent_matrix(d_latents, prior));
    }
    const auto real_out = model.discriminate(x_nom, x_fab);
    const auto fake_out = model.discriminate(fake_nom, fake_fab);
    const Tensor loss_d = discriminator_loss(real_out.logit, fake_out.logit);
    const Tensor d_info = info_loss(fake_out.q_mean, code_matrix(d_latents, prior));
    const double loss_d_value = loss_d.item();

    auto diverged = [&](const std::string& phase, double value) {
      std::ostringstream os;
      os << "non-finite " << phase << " loss (" << value << ") at step " << step << "; last good state is step "
         << last_good->step;
      ad::Tape::current().clear();
      throw NonFiniteLossError(os.str(), last_good);
    };
    if (!std::isfinite(loss_d_value) || !std::isfinite(d_info.item())) diverged("discriminator", loss_d_value);
    ad::backward(loss_d + d_info * cfg.lambda_info);
    adam_step(d_params, opt_d);
    zero_grad(d_params);

    // Generator update through a frozen discriminator.
    set_trainable(model.discriminator_params(), false);
    const auto g_latents = draw(prior, cfg.batch_size, rng);
    const Tensor g_nom = model.generate(latent_matrix(g_latents, prior, true));
    const Tensor g_fab = model.generate(latent_matrix(g_latents, prior));
    const auto g_out = model.discriminate(g_nom, g_fab);
    const Tensor g_info = info_loss(g_out.q_mean, code_matrix(g_latents, prior));
    const Tensor loss_g = generator_adversarial_loss(g_out.logit) + g_info * cfg.lambda_info;
    const double loss_g_value = loss_g.item();
    if (!std::isfinite(loss_g_value)) {
      set_trainable(model.discriminator_params(), true);
      diverged("generator", loss_g_value);
    }
    ad::backward(loss_g);
    adam_step(g_params, opt_g);
    zero_grad(g_params);
    set_trainable(model.discriminator_params(), true);

    ckpt.step = step;
    ckpt.history.loss_d.push_back(loss_d_value);
    ckpt.history.loss_g.push_back(loss_g_value);
    ckpt.history.info.push_back(g_info.item());
    if (hooks.on_step) hooks.on_step(step, loss_d_value, loss_g_value);
    if (cfg.checkpoint_every && step % cfg.checkpoint_every == 0) {
      last_good = std::make_shared<const ModelCheckpoint>(ckpt.clone());
      if (hooks.on_checkpoint && step != cfg.steps) hooks.on_checkpoint(*last_good);
    }
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(ckpt);
  return ckpt;
}

}  // namespace ganduf::hgan
