#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ganduf/adam.hpp"
#include "ganduf/dataset.hpp"
#include "ganduf/error.hpp"
#include "ganduf/nn.hpp"

namespace ganduf::hgan {

/// Latent layout: parent ~ U[0,1]^p, child and noise ~ N(0, 0.5 I).
struct PriorConfig {
  std::size_t parent_dim = 7;
  std::size_t child_dim = 5;
  std::size_t noise_dim = 10;
  static constexpr double kVariance = 0.5;

  static PriorConfig defaults(DesignKind kind);
  std::size_t code_dim() const { return parent_dim + child_dim; }
  std::size_t input_dim() const { return parent_dim + child_dim + noise_dim; }
  void validate() const;
  nlohmann::json to_json() const;
  static PriorConfig from_json(const nlohmann::json& j);
  bool operator==(const PriorConfig&) const = default;
};

struct LatentSample {
  std::vector<double> parent, child, noise;
};

/// Draws from the priors. nominal = true leaves the child code at zero.
LatentSample sample_latent(const PriorConfig& prior, Rng& rng, bool nominal = false);

struct TrainConfig {
  std::size_t steps = 20000;
  std::size_t batch_size = 32;
  double lr_g = 1e-4;
  double lr_d = 1e-4;
  double lambda_info = 1.0;
  std::uint64_t seed = 0;
  /// 0 disables periodic snapshots.
  std::size_t checkpoint_every = 0;

  static TrainConfig defaults(DesignKind kind);
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  bool operator==(const TrainConfig&) const = default;
};

struct DiscriminatorOutput {
  ad::Tensor logit;   // [B, 1]
  ad::Tensor q_mean;  // [B, parent_dim + child_dim]
};

/// Generator G(c_p, c_c, z) and the paired discriminator D with its Q head.
/// The airfoil generator emits Bezier control values per coordinate, so its
/// outlines are polynomial in arc parameter and free of point-wise jitter.
/// Copies share parameter storage; use clone() for an independent snapshot.
class Model {
 public:
  Model() = default;
  Model(DesignKind kind, const PriorConfig& prior, std::uint64_t init_seed);

  DesignKind kind() const { return kind_; }
  const PriorConfig& prior() const { return prior_; }

  /// [B, input_dim] latent rows (parent | child | noise) -> [B, design_size]
  /// in normalized space.
  ad::Tensor generate(const ad::Tensor& latent) const;
  /// Joint pair input, each [B, design_size].
  DiscriminatorOutput discriminate(const ad::Tensor& x_nom, const ad::Tensor& x_fab) const;

  nn::ParameterSet& generator_params() { return gen_; }
  const nn::ParameterSet& generator_params() const { return gen_; }
  /// Discriminator trunk, D head and Q head.
  nn::ParameterSet& discriminator_params() { return disc_; }
  const nn::ParameterSet& discriminator_params() const { return disc_; }

  Model clone() const;

 private:
  DesignKind kind_ = DesignKind::Airfoil;
  PriorConfig prior_;
  nn::ParameterSet gen_, disc_;
  std::vector<nn::LinearRef> gen_fc_, disc_fc_;
  std::vector<nn::ConvRef> gen_conv_, disc_conv_;
  nn::LinearRef d_head_, q_head_;
  ad::Tensor curve_basis_;  // airfoil only: fixed Bernstein basis, [2K, 384]
};

/// Control values per coordinate of the airfoil generator's Bezier output.
inline constexpr std::size_t kCurveControls = 32;

/// Rows of [parent | child | noise]; child is zeroed when nominal is set.
ad::Tensor latent_matrix(const std::vector<LatentSample>& samples, const PriorConfig& prior, bool nominal = false);

/// Probabilities are clamped to [1e-7, 1 - 1e-7] before every log.
inline constexpr double kProbabilityClamp = 1e-7;

/// -mean[log D(real) + log(1 - D(fake))].
ad::Tensor discriminator_loss(const ad::Tensor& real_logit, const ad::Tensor& fake_logit);
/// -mean log D(fake) (non-saturating form).
ad::Tensor generator_adversarial_loss(const ad::Tensor& fake_logit);
/// -mean log N(codes; q_mean, I): the negated mutual-information bound with
/// the code entropy dropped.
ad::Tensor info_loss(const ad::Tensor& q_mean, const ad::Tensor& codes);

struct HganLoss {
  ad::Tensor loss_d;
  ad::Tensor loss_g;
  ad::Tensor info;
};

/// loss_d = discriminator_loss; loss_g = generator_adversarial_loss + lambda * info.
HganLoss hgan_loss(const DiscriminatorOutput& real, const DiscriminatorOutput& fake, const ad::Tensor& codes,
                   double lambda);

struct LossHistory {
  std::vector<double> loss_d, loss_g, info;
  std::size_t size() const { return loss_d.size(); }
  bool operator==(const LossHistory&) const = default;
};

struct ModelCheckpoint {
  Model model;
  TrainConfig train;
  Normalization normalization;
  std::size_t step = 0;
  LossHistory history;

  DesignKind kind() const { return model.kind(); }
  const PriorConfig& prior() const { return model.prior(); }
  ModelCheckpoint clone() const;
};

/// Raised when a loss stops being finite; carries the most recent good state.
class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(const std::string& what, std::shared_ptr<const ModelCheckpoint> last_good)
      : Error(what), last_good_(std::move(last_good)) {}
  const ModelCheckpoint& last_good() const { return *last_good_; }

 private:
  std::shared_ptr<const ModelCheckpoint> last_good_;
};

struct TrainHooks {
  /// Called every checkpoint_every steps and after the final step.
  std::function<void(const ModelCheckpoint&)> on_checkpoint;
  /// Called after each step with (step, loss_d, loss_g).
  std::function<void(std::size_t, double, double)> on_step;
};

/// Fresh model initialised from train.seed.
ModelCheckpoint initial_checkpoint(const DesignDataset& dataset, const TrainConfig& train, const PriorConfig& prior);

/// One discriminator update followed by one generator update per step.
ModelCheckpoint train(const DesignDataset& dataset, const TrainConfig& train, const PriorConfig& prior,
                      const TrainHooks& hooks = {});

/// Generator output for one latent sample, in normalized space. Throws
/// DimensionError when the sample does not match the priors.
Design generate(const ModelCheckpoint& ckpt, const LatentSample& sample);
/// Batched form of generate().
std::vector<Design> generate(const ModelCheckpoint& ckpt, const std::vector<LatentSample>& samples);
/// Maps a normalized-space design back to physical coordinates.
Design to_physical(const ModelCheckpoint& ckpt, const Design& normalized);

struct Discrimination {
  double d = 0.5;
  std::vector<double> parent_mean, child_mean;
  /// Fixed unit variance: all zeros.
  std::vector<double> parent_log_var, child_log_var;
};

Discrimination discriminate(const ModelCheckpoint& ckpt, const Design& x_nom, const Design& x_fab);

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ganduf::hgan
