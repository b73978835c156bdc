#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>

#include "vda/codec.hpp"
#include "vda/error.hpp"
#include "vda/rng.hpp"

namespace vda {

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, const AdamConfig& cfg) {
  require(grad.size() == params.size(), ErrorCode::ShapeMismatch, "adam_step: gradient size mismatch");
  if (state.m.size() == 0) state.m = Eigen::VectorXd::Zero(params.size());
  if (state.v.size() == 0) state.v = Eigen::VectorXd::Zero(params.size());
  require(state.m.size() == params.size() && state.v.size() == params.size(), ErrorCode::ShapeMismatch,
          "adam_step: moment size mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

void TrainConfig::validate() const {
  require(batch_size >= 1, ErrorCode::InvalidArgument, "batch size must be at least 1");
  require(adam.learning_rate > 0.0 && std::isfinite(adam.learning_rate), ErrorCode::InvalidArgument,
          "learning rate must be positive");
  require(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0, ErrorCode::InvalidArgument,
          "Adam betas must lie in [0, 1)");
  require(adam.epsilon > 0.0, ErrorCode::InvalidArgument, "Adam epsilon must be positive");
  if (jitter) jitter->validate();
}

std::uint64_t params_checksum(const Eigen::VectorXd& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &params[i], sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

TrainReport train_codec(NeuralCodec& codec, const FieldSeries& train, const FieldSeries& held, const TrainConfig& cfg,
                        AdamState* state) {
  cfg.validate();
  require(train.points() == codec.input_dim() || train.empty(), ErrorCode::ShapeMismatch,
          "train_codec: training data does not match codec input size");
  require(held.points() == codec.input_dim() || held.empty(), ErrorCode::ShapeMismatch,
          "train_codec: held-out data does not match codec input size");

  const auto start = std::chrono::steady_clock::now();
  AdamState local;
  AdamState& adam = state ? *state : local;
  TrainReport report;
  const std::size_t count = train.steps();

  std::optional<NormStats> jitter_stats;
  if (cfg.jitter && count > 0) jitter_stats = compute_norm_stats(train, NormMode::PerLocation);

  const auto n = static_cast<Eigen::Index>(codec.input_dim());
  Eigen::VectorXd grad;
  for (std::size_t epoch = 0; epoch < cfg.epochs && count > 0; ++epoch) {
    // Seeded Fisher-Yates order for this epoch.
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(cfg.seed, "shuffle", epoch), "shuffle");
    for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double epoch_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t b0 = 0; b0 < count; b0 += cfg.batch_size, ++batch_index) {
      const std::size_t b1 = std::min(count, b0 + cfg.batch_size);
      const auto width = static_cast<Eigen::Index>(b1 - b0);
      Eigen::MatrixXd targets(n, width);
      for (std::size_t k = b0; k < b1; ++k) targets.col(static_cast<Eigen::Index>(k - b0)) = train.data().col(static_cast<Eigen::Index>(order[k]));
      Eigen::MatrixXd inputs = targets;
      if (cfg.jitter) {
        for (std::size_t k = b0; k < b1; ++k) {
          JitterConfig jc = *cfg.jitter;
          jc.seed = derive_seed(cfg.jitter->seed, "jitter", epoch * count + order[k]);
          inputs.col(static_cast<Eigen::Index>(k - b0)) =
              field_jitter(Eigen::VectorXd(targets.col(static_cast<Eigen::Index>(k - b0))), jc, *jitter_stats);
        }
      }
      const double loss = codec.loss_and_gradient(inputs, targets, cfg.loss, grad);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        fail(ErrorCode::Diverged, "training diverged at epoch " + std::to_string(epoch) + " batch " +
                                      std::to_string(batch_index));
      }
      adam_step(codec.params(), grad, adam, cfg.adam);
      epoch_sum += loss * static_cast<double>(width);
    }
    report.train_loss.push_back(epoch_sum / static_cast<double>(count));
    report.held_loss.push_back(held.empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : codec.loss(held.data(), held.data(), cfg.loss));
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.checksum = params_checksum(codec.params());
  return report;
}

}  // namespace vda
