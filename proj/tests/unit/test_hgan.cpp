#include <cmath>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "ganduf/hgan.hpp"
#include "temp_dir.hpp"

using namespace ganduf;
using namespace ganduf::hgan;
using ad::Tensor;

namespace {

DesignDataset tiny_dataset(DesignKind kind, std::size_t n = 8, std::size_t m = 3) {
  auto cfg = DatasetConfig::defaults(kind);
  cfg.n_nominal = n;
  cfg.m_fabricated = m;
  cfg.perturbation.seed = 17;
  return build_dataset(cfg);
}

TrainConfig quick(std::size_t steps, std::uint64_t seed = 1) {
  TrainConfig t;
  t.steps = steps;
  t.batch_size = 4;
  t.seed = seed;
  return t;
}

bool same_params(const nn::ParameterSet& a, const nn::ParameterSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a.tensors()[i].data(), y = b.tensors()[i].data();
    if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("prior defaults and sampling") {
  CHECK(PriorConfig::defaults(DesignKind::Airfoil) == PriorConfig{7, 5, 10});
  CHECK(PriorConfig::defaults(DesignKind::Metasurface) == PriorConfig{5, 10, 10});
  CHECK_THROWS_AS((PriorConfig{0, 5, 10}.validate()), ConfigError);
  CHECK(TrainConfig::defaults(DesignKind::Airfoil).steps == 20000);
  CHECK(TrainConfig::defaults(DesignKind::Metasurface).steps == 50000);
  CHECK(TrainConfig{}.batch_size == 32);
  CHECK(TrainConfig{}.lr_g == 1e-4);

  const PriorConfig prior{3, 2, 2};
  Rng rng(4);
  const auto nominal = sample_latent(prior, rng, true);
  CHECK(nominal.child == std::vector<double>{0.0, 0.0});

  // Empirical moments over 1e5 draws.
  double s_child = 0, s2_child = 0, s_noise = 0, s2_noise = 0;
  double p_min = 1, p_max = 0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const auto s = sample_latent(prior, rng);
    for (double v : s.parent) {
      p_min = std::min(p_min, v);
      p_max = std::max(p_max, v);
    }
    s_child += s.child[0];
    s2_child += s.child[0] * s.child[0];
    s_noise += s.noise[1];
    s2_noise += s.noise[1] * s.noise[1];
  }
  CHECK(p_min >= 0.0);
  CHECK(p_max < 1.0);
  const double var_child = s2_child / n - (s_child / n) * (s_child / n);
  const double var_noise = s2_noise / n - (s_noise / n) * (s_noise / n);
  CHECK(std::abs(var_child - 0.5) < 0.025);
  CHECK(std::abs(var_noise - 0.5) < 0.025);
}

TEST_CASE("generator shapes, determinism and the nominal path") {
  for (auto kind : {DesignKind::Airfoil, DesignKind::Metasurface}) {
    const auto ds = tiny_dataset(kind, 2, 1);
    const auto ckpt = initial_checkpoint(ds, quick(0), PriorConfig::defaults(kind));
    Rng rng(9);
    const auto s = sample_latent(ckpt.prior(), rng);
    const auto a = generate(ckpt, s);
    const auto b = generate(ckpt, s);
    CHECK(a == b);
    CHECK(a.values.size() == design_size(kind));
    for (double v : a.values) CHECK(std::abs(v) <= 1.0);

    // Zeroing the child code is the nominal branch used during training.
    auto zeroed = s;
    std::fill(zeroed.child.begin(), zeroed.child.end(), 0.0);
    const Tensor via_flag = latent_matrix({s}, ckpt.prior(), true);
    const Tensor via_zero = latent_matrix({zeroed}, ckpt.prior());
    CHECK(std::equal(via_flag.data().begin(), via_flag.data().end(), via_zero.data().begin()));
    CHECK(generate(ckpt, zeroed) != a);

    auto bad = s;
    bad.parent.push_back(0.5);
    CHECK_THROWS_AS(generate(ckpt, bad), DimensionError);

    const auto phys = to_physical(ckpt, a);
    CHECK(phys.values.size() == a.values.size());
  }
}

TEST_CASE("discriminator outputs") {
  const auto ds = tiny_dataset(DesignKind::Airfoil, 2, 1);
  const auto ckpt = initial_checkpoint(ds, quick(0), PriorConfig::defaults(DesignKind::Airfoil));
  const auto nom = ds.normalization.normalize(ds.nominal_design(0));
  const auto fab = ds.normalization.normalize(ds.fabricated_design(1, 0));
  const auto r = discriminate(ckpt, nom, fab);
  CHECK(r.d > 0.0);
  CHECK(r.d < 1.0);
  CHECK(r.parent_mean.size() == 7);
  CHECK(r.child_mean.size() == 5);
  CHECK(r.parent_log_var == std::vector<double>(7, 0.0));
  const auto swapped = discriminate(ckpt, fab, nom);
  CHECK(swapped.d != r.d);
  CHECK_THROWS_AS(discriminate(ckpt, nom, Design{DesignKind::Airfoil, {1.0}}), DimensionError);
}

TEST_CASE("loss values") {
  const Tensor zero = Tensor::zeros({4, 1});
  const double adv = discriminator_loss(zero, zero).item();
  CHECK(adv == doctest::Approx(-2.0 * std::log(0.5)).epsilon(1e-12));
  CHECK(adv == doctest::Approx(1.3863).epsilon(1e-4));

  // Q at the exact code with unit variance: the analytic log-density.
  const Tensor codes = Tensor::from({2, 3}, {0.1, 0.2, 0.3, -1.0, 0.0, 2.0});
  const double at_mean = info_loss(codes, codes).item();
  CHECK(at_mean == doctest::Approx(0.5 * 3 * std::log(2 * std::numbers::pi)).epsilon(1e-14));

  // Offsets: direct density evaluation per row, averaged.
  const Tensor q = Tensor::from({2, 3}, {0.0, 0.0, 0.0, 1.0, 1.0, 1.0});
  double expect = 0.0;
  for (std::size_t r = 0; r < 2; ++r) {
    double logpdf = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = codes[r * 3 + c] - q[r * 3 + c];
      logpdf += std::log(std::exp(-0.5 * d * d) / std::sqrt(2 * std::numbers::pi));
    }
    expect -= logpdf / 2.0;
  }
  CHECK(info_loss(q, codes).item() == doctest::Approx(expect).epsilon(1e-13));

  const DiscriminatorOutput real{Tensor::from({2, 1}, {1.0, 2.0}), q};
  const DiscriminatorOutput fake{Tensor::from({2, 1}, {-0.5, 0.3}), q};
  const auto l0 = hgan_loss(real, fake, codes, 0.0);
  CHECK(l0.loss_g.item() == generator_adversarial_loss(fake.logit).item());
  const auto l1 = hgan_loss(real, fake, codes, 2.5);
  CHECK(l1.loss_g.item() == doctest::Approx(l0.loss_g.item() + 2.5 * expect).epsilon(1e-13));
  CHECK(l1.loss_d.item() == l0.loss_d.item());
  ad::Tape::current().clear();

  // Saturated logits stay finite thanks to clamping.
  const Tensor huge = Tensor::from({2, 1}, {1e4, -1e4});
  CHECK(std::isfinite(discriminator_loss(huge, -1.0 * huge).item()));
  CHECK(std::isfinite(generator_adversarial_loss(-1.0 * huge).item()));
  CHECK(discriminator_loss(huge, huge).item() <= -std::log(1e-7) + 1e-6);
}

TEST_CASE("training determinism and zero steps") {
  const auto ds = tiny_dataset(DesignKind::Airfoil);
  const auto prior = PriorConfig{3, 2, 2};
  const auto init = initial_checkpoint(ds, quick(0), prior);
  const auto zero = train(ds, quick(0), prior);
  CHECK(zero.step == 0);
  CHECK(same_params(zero.model.generator_params(), init.model.generator_params()));
  CHECK(same_params(zero.model.discriminator_params(), init.model.discriminator_params()));

  const auto a = train(ds, quick(6), prior);
  const auto b = train(ds, quick(6), prior);
  CHECK(a.history == b.history);
  CHECK(a.history.size() == 6);
  CHECK(same_params(a.model.generator_params(), b.model.generator_params()));
  CHECK_FALSE(same_params(a.model.generator_params(), init.model.generator_params()));
  const auto c = train(ds, quick(6, 2), prior);
  CHECK(c.history.loss_d != a.history.loss_d);
  for (double v : a.history.loss_g) CHECK(std::isfinite(v));
}

TEST_CASE("periodic checkpoints") {
  const auto ds = tiny_dataset(DesignKind::Airfoil);
  auto cfg = quick(7);
  cfg.checkpoint_every = 3;
  std::vector<std::size_t> steps;
  TrainHooks hooks;
  hooks.on_checkpoint = [&](const ModelCheckpoint& c) { steps.push_back(c.step); };
  train(ds, cfg, PriorConfig{2, 2, 2}, hooks);
  CHECK(steps == std::vector<std::size_t>{3, 6, 7});
}

TEST_CASE("generator step descends on its own batch") {
  const auto ds = tiny_dataset(DesignKind::Airfoil);
  const PriorConfig prior{3, 2, 2};
  auto ckpt = initial_checkpoint(ds, quick(0), prior);
  auto& model = ckpt.model;
  Rng rng(5);
  std::vector<LatentSample> lat(8);
  for (auto& s : lat) s = sample_latent(prior, rng);
  std::vector<double> code_rows;
  for (const auto& s : lat) {
    code_rows.insert(code_rows.end(), s.parent.begin(), s.parent.end());
    code_rows.insert(code_rows.end(), s.child.begin(), s.child.end());
  }
  const Tensor codes = Tensor::from({8, prior.code_dim()}, code_rows);
  auto g_loss = [&] {
    const auto out = model.discriminate(model.generate(latent_matrix(lat, prior, true)),
                                        model.generate(latent_matrix(lat, prior)));
    return generator_adversarial_loss(out.logit) + info_loss(out.q_mean, codes);
  };
  for (auto& t : model.discriminator_params().tensors()) t.set_requires_grad(false);
  auto& params = model.generator_params().tensors();
  const Tensor before = g_loss();
  ad::backward(before);
  std::vector<std::vector<double>> grads, old;
  for (const auto& t : params) {
    grads.emplace_back(t.grad().begin(), t.grad().end());
    old.emplace_back(t.data().begin(), t.data().end());
  }
  AdamState opt(1e-4, 0.5, 0.999, 1e-8);
  adam_step(params, opt);
  double inner = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t k = 0; k < grads[i].size(); ++k) inner += grads[i][k] * (params[i].data()[k] - old[i][k]);
  CHECK(inner < -1e-9);
  zero_grad(params);
  ad::Tensor after;
  {
    ad::NoGradGuard ng;
    after = g_loss();
  }
  CHECK(after.item() <= before.item());
}

TEST_CASE("non-finite loss aborts with the last good state") {
  const auto ds = tiny_dataset(DesignKind::Airfoil);
  auto cfg = quick(40);
  cfg.lr_g = cfg.lr_d = 1e300;
  cfg.checkpoint_every = 1;
  try {
    train(ds, cfg, PriorConfig{2, 2, 2});
    FAIL("expected divergence");
  } catch (const NonFiniteLossError& e) {
    CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
    CHECK(e.last_good().step < 40);
    CHECK(std::isfinite(e.last_good().history.loss_d.empty() ? 0.0 : e.last_good().history.loss_d.back()));
  }
}

TEST_CASE("checkpoint round-trip reproduces outputs bitwise") {
  testing_support::TempDir tmp("ckpt");
  for (auto kind : {DesignKind::Airfoil, DesignKind::Metasurface}) {
    const auto ds = tiny_dataset(kind, 3, 2);
    auto cfg = quick(2);
    const auto ckpt = train(ds, cfg, PriorConfig{2, 3, 2});
    const auto path = tmp / (to_string(kind) + ".ckpt");
    save_checkpoint(ckpt, path);
    const auto back = load_checkpoint(path);
    CHECK(back.step == 2);
    CHECK(back.history == ckpt.history);
    CHECK(back.train == ckpt.train);
    CHECK(back.prior() == ckpt.prior());
    CHECK(back.normalization == ckpt.normalization);
    CHECK(same_params(back.model.generator_params(), ckpt.model.generator_params()));
    CHECK(same_params(back.model.discriminator_params(), ckpt.model.discriminator_params()));
    Rng rng(1);
    const auto s = sample_latent(ckpt.prior(), rng);
    CHECK(generate(back, s) == generate(ckpt, s));
  }
  // Damaged files fail with typed errors.
  const auto path = tmp / "airfoil.ckpt";
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  auto write = [&](const std::string& b) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << b;
  };
  auto flipped = bytes;
  flipped[bytes.size() - 400] ^= 0x40;
  write(flipped);
  CHECK_THROWS_AS(load_checkpoint(path), ChecksumError);
  write(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(path), TruncatedError);
  CHECK_THROWS_AS(load_checkpoint(tmp / "none.ckpt"), IoError);
}
