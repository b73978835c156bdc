#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vda/field.hpp"
#include "vda/reduced_space.hpp"

namespace vda {

/// Encoder f : R^n -> R^m and decoder g : R^m -> R^n.
class Codec {
 public:
  virtual ~Codec() = default;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t latent_dim() const = 0;
  /// Both throw NonFinite if the result contains NaN or infinity.
  virtual Eigen::VectorXd encode(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd decode(const Eigen::VectorXd& z) const = 0;

  /// Column-wise encode/decode, parallel over columns. Every column goes
  /// through encode()/decode() unchanged, so results equal the per-column calls.
  Eigen::MatrixXd encode_batch(const Eigen::MatrixXd& xs) const;
  Eigen::MatrixXd decode_batch(const Eigen::MatrixXd& zs) const;
};

/// encode(x) = Q^T x, decode(z) = Q z with orthonormal Q (n x m).
class LinearCodec final : public Codec {
 public:
  explicit LinearCodec(Eigen::MatrixXd q);

  std::size_t input_dim() const override { return static_cast<std::size_t>(q_.rows()); }
  std::size_t latent_dim() const override { return static_cast<std::size_t>(q_.cols()); }
  Eigen::VectorXd encode(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd decode(const Eigen::VectorXd& z) const override;
  const Eigen::MatrixXd& basis() const { return q_; }

 private:
  Eigen::MatrixXd q_;
};

/// Q = first m left singular vectors; m <= S.
LinearCodec make_linear_codec(const SvdFactors& factors, std::size_t m);

enum class Activation : std::uint32_t { Identity = 0, PReLU = 1 };
enum class LossKind { L2, L1 };

/// Dense autoencoder. `widths` = [n, h_1, ..., m] describes the encoder; the
/// decoder mirrors it back to n. Every affine map except the last one of the
/// encoder and the last one of the decoder is followed by the activation
/// (PReLU uses one learnable slope per unit).
///
/// Parameters live in one flat vector, layer by layer: W (column-major,
/// out x in), then b, then the slopes if the layer is activated.
/// widths = [n] is the degenerate identity codec with no parameters.
class NeuralCodec final : public Codec {
 public:
  NeuralCodec(std::vector<std::size_t> widths, Activation activation = Activation::PReLU);

  /// n -> 4m -> m -> 4m -> n
  static NeuralCodec default_architecture(std::size_t n, std::size_t m);

  /// Weights ~ N(0, 2 / fan_in), biases 0, slopes 0.25.
  void initialize(std::uint64_t seed);

  std::size_t input_dim() const override { return widths_.front(); }
  std::size_t latent_dim() const override { return widths_.back(); }
  Eigen::VectorXd encode(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd decode(const Eigen::VectorXd& z) const override;

  const std::vector<std::size_t>& widths() const { return widths_; }
  Activation activation() const { return activation_; }
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t param_count() const { return static_cast<std::size_t>(params_.size()); }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& params() { return params_; }
  void set_params(const Eigen::VectorXd& params);
  /// [offset, offset + size) of layer l inside the parameter vector.
  std::pair<std::size_t, std::size_t> layer_param_range(std::size_t l) const;

  /// Full reconstruction g(f(x)) for every column.
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& xs) const;
  /// Mean over columns of the per-sample loss (1/n)||g(f(x)) - t||^2 (or the
  /// mean absolute error for L1).
  double loss(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, LossKind kind = LossKind::L2) const;
  /// Same loss, with its gradient w.r.t. the parameters written to `grad`.
  double loss_and_gradient(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, LossKind kind,
                           Eigen::VectorXd& grad) const;

 private:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t offset = 0;  // start of W
    bool activated = false;
    std::size_t size() const { return out * in + out + (activated ? out : 0); }
  };

  Eigen::MatrixXd run_layers(Eigen::MatrixXd h, std::size_t first, std::size_t last) const;
  Eigen::Map<const Eigen::MatrixXd> weights(const Layer& layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(const Layer& layer) const;
  Eigen::Map<const Eigen::VectorXd> slopes(const Layer& layer) const;

  std::vector<std::size_t> widths_;
  Activation activation_;
  std::vector<Layer> layers_;
  Eigen::VectorXd params_;
};

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::uint64_t t = 0;
};

/// One Adam update of `params` in place. Empty moment vectors are zero-initialized.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, const AdamConfig& cfg);

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 16;
  AdamConfig adam;
  std::optional<JitterConfig> jitter;
  LossKind loss = LossKind::L2;
  std::uint64_t seed = 0;
  void validate() const;
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> held_loss;  // NaN when the held-out split is empty
  double wall_seconds = 0.0;
  std::uint64_t checksum = 0;
};

/// Mini-batch Adam on the reconstruction loss. Jitter, when configured, is
/// applied to inputs only; targets stay clean. Each epoch visits the training
/// steps in a seeded random order. Throws Diverged (with epoch and batch) if
/// the loss or gradient stops being finite.
TrainReport train_codec(NeuralCodec& codec, const FieldSeries& train, const FieldSeries& held,
                        const TrainConfig& cfg, AdamState* state = nullptr);

/// FNV-1a over the bytes of the parameter vector.
std::uint64_t params_checksum(const Eigen::VectorXd& params);

/// Analytic gradient of the single-sample L2 reconstruction loss.
using GradientFn = std::function<Eigen::VectorXd(const NeuralCodec&, const Eigen::VectorXd&)>;

/// Max relative error between the analytic gradient (or `gradient` if given)
/// and central differences with step h. Checks every parameter when there are
/// at most 500, otherwise a seeded subset of 500. Per-parameter error is
/// |a - f| / max(|a|, |f|, 1e-4 * max(1, ||f||_inf)).
double grad_check(const NeuralCodec& codec, const Eigen::VectorXd& sample, double h,
                  const GradientFn& gradient = nullptr, std::uint64_t seed = 0);

struct LatentGram {
  Eigen::MatrixXd gram;  // Z Z^T / count
  double score = 0.0;    // ||D^-1/2 G D^-1/2 - I||_F / m
};

LatentGram latent_gram(const Codec& codec, const FieldSeries& data);

/// VDAC checkpoint: "VDAC", u32 version, u32 width count, widths (u32 each),
/// u32 activation tag (0 identity, 1 PReLU, 2 orthonormal linear), u64 param
/// count, params (binary64), u8 has_adam, then optionally u64 t, m, v.
struct CodecCheckpoint {
  std::unique_ptr<Codec> codec;
  std::optional<AdamState> adam;

  NeuralCodec* neural() const { return dynamic_cast<NeuralCodec*>(codec.get()); }
  LinearCodec* linear() const { return dynamic_cast<LinearCodec*>(codec.get()); }
};

void save_codec(const NeuralCodec& codec, const std::filesystem::path& path, const AdamState* adam = nullptr);
void save_codec(const LinearCodec& codec, const std::filesystem::path& path);
CodecCheckpoint load_codec(const std::filesystem::path& path);

}  // namespace vda
