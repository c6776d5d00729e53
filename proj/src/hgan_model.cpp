#include <cmath>
#include <numbers>

#include "ganduf/hgan.hpp"

namespace ganduf::hgan {

using ad::Tensor;
using nlohmann::json;

namespace {

constexpr double kLeak = 0.2;
constexpr std::size_t kSide = geometry::kFieldSize;
constexpr std::size_t kCoarse = kSide / 4;

Tensor act(const Tensor& x) { return ad::leaky_relu(x, kLeak); }

// Row k < K carries x control value k, row K + k the y one; point i sits at
// parameter i / 191 along the outline.
Tensor bezier_basis() {
  constexpr std::size_t k = kCurveControls, n = geometry::kAirfoilPoints;
  std::vector<double> m(2 * k * 2 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < k; ++j) {
      const double b = geometry::bernstein(static_cast<int>(k - 1), static_cast<int>(j), t);
      m[j * 2 * n + 2 * i] = b;
      m[(k + j) * 2 * n + 2 * i + 1] = b;
    }
  }
  return Tensor::from({2 * k, 2 * n}, std::move(m));
}

}  // namespace

PriorConfig PriorConfig::defaults(DesignKind kind) {
  if (kind == DesignKind::Airfoil) return {7, 5, 10};
  return {5, 10, 10};
}

void PriorConfig::validate() const {
  if (parent_dim < 1 || child_dim < 1 || noise_dim < 1) throw ConfigError("latent dimensions must all be >= 1");
}

json PriorConfig::to_json() const {
  return {{"parent_dim", parent_dim}, {"child_dim", child_dim}, {"noise_dim", noise_dim}, {"variance", kVariance}};
}

PriorConfig PriorConfig::from_json(const json& j) {
  PriorConfig p{j.at("parent_dim"), j.at("child_dim"), j.at("noise_dim")};
  p.validate();
  return p;
}

LatentSample sample_latent(const PriorConfig& prior, Rng& rng, bool nominal) {
  const double sd = std::sqrt(PriorConfig::kVariance);
  LatentSample s;
  s.parent = rng.uniform_vector(prior.parent_dim);
  s.child = nominal ? std::vector<double>(prior.child_dim, 0.0) : rng.normal_vector(prior.child_dim, sd);
  s.noise = rng.normal_vector(prior.noise_dim, sd);
  return s;
}

TrainConfig TrainConfig::defaults(DesignKind kind) {
  TrainConfig t;
  t.steps = kind == DesignKind::Airfoil ? 20000 : 50000;
  return t;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(lr_g > 0.0) || !(lr_d > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(lambda_info >= 0.0)) throw ConfigError("lambda_info must be nonnegative");
}

json TrainConfig::to_json() const {
  return {{"steps", steps},   {"batch_size", batch_size}, {"lr_g", lr_g},
          {"lr_d", lr_d},     {"lambda_info", lambda_info}, {"seed", seed},
          {"checkpoint_every", checkpoint_every}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig t;
  t.steps = j.at("steps");
  t.batch_size = j.at("batch_size");
  t.lr_g = j.at("lr_g");
  t.lr_d = j.at("lr_d");
  t.lambda_info = j.at("lambda_info");
  t.seed = j.at("seed");
  t.checkpoint_every = j.at("checkpoint_every");
  t.validate();
  return t;
}

// ---------------------------------------------------------------------------

Model::Model(DesignKind kind, const PriorConfig& prior, std::uint64_t init_seed) : kind_(kind), prior_(prior) {
  prior_.validate();
  Rng rng(init_seed);
  const std::size_t in = prior_.input_dim();
  const std::size_t dsz = design_size(kind);
  if (kind == DesignKind::Airfoil) {
    gen_fc_ = {nn::add_linear(gen_, "g.fc1", in, 256, rng), nn::add_linear(gen_, "g.fc2", 256, 512, rng),
               nn::add_linear(gen_, "g.out", 512, 2 * kCurveControls, rng)};
    curve_basis_ = bezier_basis();
    disc_fc_ = {nn::add_linear(disc_, "d.fc1", 2 * dsz, 512, rng), nn::add_linear(disc_, "d.fc2", 512, 256, rng)};
    d_head_ = nn::add_linear(disc_, "d.head", 256, 1, rng);
    q_head_ = nn::add_linear(disc_, "q.head", 256, prior_.code_dim(), rng);
  } else {
    gen_fc_ = {nn::add_linear(gen_, "g.fc1", in, 256, rng),
               nn::add_linear(gen_, "g.fc2", 256, kCoarse * kCoarse * 8, rng)};
    gen_conv_ = {nn::add_conv(gen_, "g.conv1", 3, 8, 8, rng), nn::add_conv(gen_, "g.conv2", 3, 8, 1, rng)};
    disc_conv_ = {nn::add_conv(disc_, "d.conv1", 3, 2, 8, rng), nn::add_conv(disc_, "d.conv2", 3, 8, 16, rng)};
    disc_fc_ = {nn::add_linear(disc_, "d.fc1", kCoarse * kCoarse * 16, 128, rng)};
    d_head_ = nn::add_linear(disc_, "d.head", 128, 1, rng);
    q_head_ = nn::add_linear(disc_, "q.head", 128, prior_.code_dim(), rng);
  }
}

Tensor Model::generate(const Tensor& latent) const {
  if (latent.rank() != 2 || latent.dim(1) != prior_.input_dim()) {
    throw DimensionError("generator expects [B, " + std::to_string(prior_.input_dim()) + "] latents, got " +
                         ad::to_string(latent.shape()));
  }
  const std::size_t b = latent.dim(0);
  if (kind_ == DesignKind::Airfoil) {
    Tensor h = act(gen_fc_[0].bind(gen_)(latent));
    h = act(gen_fc_[1].bind(gen_)(h));
    return ad::tanh(ad::matmul(gen_fc_[2].bind(gen_)(h), curve_basis_));
  }
  Tensor h = act(gen_fc_[0].bind(gen_)(latent));
  h = act(gen_fc_[1].bind(gen_)(h));
  h = ad::reshape(h, {b, kCoarse, kCoarse, 8});
  h = act(gen_conv_[0].bind(gen_)(ad::upsample2(h)));
  h = gen_conv_[1].bind(gen_)(ad::upsample2(h));
  return ad::reshape(ad::tanh(h), {b, kSide * kSide});
}

DiscriminatorOutput Model::discriminate(const Tensor& x_nom, const Tensor& x_fab) const {
  const std::size_t dsz = design_size(kind_);
  if (x_nom.rank() != 2 || x_nom.dim(1) != dsz || x_fab.shape() != x_nom.shape()) {
    throw DimensionError("discriminator expects two [B, " + std::to_string(dsz) + "] inputs, got " +
                         ad::to_string(x_nom.shape()) + " and " + ad::to_string(x_fab.shape()));
  }
  const std::size_t b = x_nom.dim(0);
  Tensor h;
  if (kind_ == DesignKind::Airfoil) {
    h = act(disc_fc_[0].bind(disc_)(ad::concat({x_nom, x_fab}, 1)));
    h = act(disc_fc_[1].bind(disc_)(h));
  } else {
    Tensor x = ad::concat({ad::reshape(x_nom, {b, kSide, kSide, 1}), ad::reshape(x_fab, {b, kSide, kSide, 1})}, 3);
    h = ad::avg_pool2(act(disc_conv_[0].bind(disc_)(x)));
    h = ad::avg_pool2(act(disc_conv_[1].bind(disc_)(h)));
    h = act(disc_fc_[0].bind(disc_)(ad::reshape(h, {b, kCoarse * kCoarse * 16})));
  }
  return {d_head_.bind(disc_)(h), q_head_.bind(disc_)(h)};
}

Model Model::clone() const {
  Model m = *this;
  m.gen_ = gen_.clone();
  m.disc_ = disc_.clone();
  return m;
}

// ---------------------------------------------------------------------------

Tensor latent_matrix(const std::vector<LatentSample>& samples, const PriorConfig& prior, bool nominal) {
  if (samples.empty()) throw ContractError("latent batch is empty");
  std::vector<double> rows;
  rows.reserve(samples.size() * prior.input_dim());
  for (const auto& s : samples) {
    if (s.parent.size() != prior.parent_dim || s.child.size() != prior.child_dim || s.noise.size() != prior.noise_dim) {
      throw DimensionError("latent sample dims (" + std::to_string(s.parent.size()) + ", " +
                           std::to_string(s.child.size()) + ", " + std::to_string(s.noise.size()) +
                           ") do not match priors (" + std::to_string(prior.parent_dim) + ", " +
                           std::to_string(prior.child_dim) + ", " + std::to_string(prior.noise_dim) + ")");
    }
    rows.insert(rows.end(), s.parent.begin(), s.parent.end());
    if (nominal) {
      rows.insert(rows.end(), prior.child_dim, 0.0);
    } else {
      rows.insert(rows.end(), s.child.begin(), s.child.end());
    }
    rows.insert(rows.end(), s.noise.begin(), s.noise.end());
  }
  return Tensor::from({samples.size(), prior.input_dim()}, std::move(rows));
}

Tensor discriminator_loss(const Tensor& real_logit, const Tensor& fake_logit) {
  const Tensor p_real = ad::clamp(ad::sigmoid(real_logit), kProbabilityClamp, 1.0 - kProbabilityClamp);
  const Tensor p_fake = ad::clamp(ad::sigmoid(fake_logit), kProbabilityClamp, 1.0 - kProbabilityClamp);
  return -(ad::mean(ad::log(p_real)) + ad::mean(ad::log(1.0 - p_fake)));
}

Tensor generator_adversarial_loss(const Tensor& fake_logit) {
  const Tensor p_fake = ad::clamp(ad::sigmoid(fake_logit), kProbabilityClamp, 1.0 - kProbabilityClamp);
  return -ad::mean(ad::log(p_fake));
}

Tensor info_loss(const Tensor& q_mean, const Tensor& codes) {
  if (q_mean.shape() != codes.shape()) {
    throw DimensionError("Q head shape " + ad::to_string(q_mean.shape()) + " vs codes " + ad::to_string(codes.shape()));
  }
  const double dim = static_cast<double>(codes.dim(1));
  const double log_norm = 0.5 * dim * std::log(2.0 * std::numbers::pi);
  // Mean over the batch of the per-row negative log density.
  return ad::mean(ad::sum(ad::square(q_mean - codes), 1)) * 0.5 + log_norm;
}

HganLoss hgan_loss(const DiscriminatorOutput& real, const DiscriminatorOutput& fake, const Tensor& codes,
                   double lambda) {
  HganLoss out;
  out.loss_d = discriminator_loss(real.logit, fake.logit);
  out.info = info_loss(fake.q_mean, codes);
  out.loss_g = generator_adversarial_loss(fake.logit) + out.info * lambda;
  return out;
}

}  // namespace ganduf::hgan
