#include "vda/codec.hpp"

#include <cmath>
#include <string>

#include "vda/error.hpp"
#include "vda/kernels.hpp"
#include "vda/rng.hpp"

namespace vda {
namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  require(m.allFinite(), ErrorCode::NonFinite, std::string(what) + " produced non-finite values");
}

}  // namespace

Eigen::MatrixXd Codec::encode_batch(const Eigen::MatrixXd& xs) const {
  require(xs.rows() == static_cast<Eigen::Index>(input_dim()), ErrorCode::ShapeMismatch, "encode_batch: row count");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(latent_dim()), xs.cols());
  const Eigen::Index cols = xs.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < cols; ++j) out.col(j) = encode(xs.col(j));
  return out;
}

Eigen::MatrixXd Codec::decode_batch(const Eigen::MatrixXd& zs) const {
  require(zs.rows() == static_cast<Eigen::Index>(latent_dim()), ErrorCode::ShapeMismatch, "decode_batch: row count");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(input_dim()), zs.cols());
  const Eigen::Index cols = zs.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < cols; ++j) out.col(j) = decode(zs.col(j));
  return out;
}

// ---------------------------------------------------------------------------
// LinearCodec

LinearCodec::LinearCodec(Eigen::MatrixXd q) : q_(std::move(q)) {
  require(q_.rows() > 0 && q_.cols() > 0, ErrorCode::InvalidArgument, "LinearCodec: empty basis");
  require(q_.cols() <= q_.rows(), ErrorCode::InvalidArgument, "LinearCodec: m must not exceed n");
  require(q_.allFinite(), ErrorCode::NonFinite, "LinearCodec: non-finite basis");
}

Eigen::VectorXd LinearCodec::encode(const Eigen::VectorXd& x) const {
  require(x.size() == q_.rows(), ErrorCode::ShapeMismatch, "LinearCodec::encode: size mismatch");
  Eigen::VectorXd z = kernels::serial::gemv_t(q_, x);
  require_finite(z, "LinearCodec::encode");
  return z;
}

Eigen::VectorXd LinearCodec::decode(const Eigen::VectorXd& z) const {
  require(z.size() == q_.cols(), ErrorCode::ShapeMismatch, "LinearCodec::decode: size mismatch");
  Eigen::VectorXd x = kernels::serial::gemv(q_, z);
  require_finite(x, "LinearCodec::decode");
  return x;
}

LinearCodec make_linear_codec(const SvdFactors& factors, std::size_t m) {
  require(m >= 1 && m <= factors.rank_capacity(), ErrorCode::InvalidArgument,
          "make_linear_codec: m=" + std::to_string(m) + " outside [1, S=" + std::to_string(factors.rank_capacity()) + "]");
  return LinearCodec(factors.U.leftCols(static_cast<Eigen::Index>(m)));
}

// ---------------------------------------------------------------------------
// NeuralCodec

NeuralCodec::NeuralCodec(std::vector<std::size_t> widths, Activation activation)
    : widths_(std::move(widths)), activation_(activation) {
  require(!widths_.empty(), ErrorCode::InvalidArgument, "NeuralCodec: no widths");
  for (std::size_t w : widths_) require(w > 0, ErrorCode::InvalidArgument, "NeuralCodec: zero layer width");
  require(activation_ == Activation::Identity || activation_ == Activation::PReLU, ErrorCode::InvalidArgument,
          "NeuralCodec: unknown activation");
  const std::size_t depth = widths_.size() - 1;
  std::size_t offset = 0;
  auto add = [&](std::size_t in, std::size_t out, bool last) {
    Layer layer{in, out, offset, !last && activation_ == Activation::PReLU};
    offset += layer.size();
    layers_.push_back(layer);
  };
  for (std::size_t i = 0; i < depth; ++i) add(widths_[i], widths_[i + 1], i + 1 == depth);
  for (std::size_t j = 0; j < depth; ++j) add(widths_[depth - j], widths_[depth - j - 1], j + 1 == depth);
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
  for (const Layer& layer : layers_) {
    if (layer.activated) {
      const auto start = static_cast<Eigen::Index>(layer.offset + layer.out * layer.in + layer.out);
      params_.segment(start, static_cast<Eigen::Index>(layer.out)).setConstant(0.25);
    }
  }
}

NeuralCodec NeuralCodec::default_architecture(std::size_t n, std::size_t m) {
  require(m >= 1 && 4 * m <= n, ErrorCode::InvalidArgument, "default architecture needs 4m <= n");
  return NeuralCodec({n, 4 * m, m}, Activation::PReLU);
}

void NeuralCodec::initialize(std::uint64_t seed) {
  Rng rng(seed, "codec-init");
  for (const Layer& layer : layers_) {
    const double scale = std::sqrt(2.0 / static_cast<double>(layer.in));
    const std::size_t nw = layer.out * layer.in;
    for (std::size_t i = 0; i < nw; ++i) params_[static_cast<Eigen::Index>(layer.offset + i)] = scale * rng.normal();
    for (std::size_t i = 0; i < layer.out; ++i) params_[static_cast<Eigen::Index>(layer.offset + nw + i)] = 0.0;
    if (layer.activated) {
      for (std::size_t i = 0; i < layer.out; ++i)
        params_[static_cast<Eigen::Index>(layer.offset + nw + layer.out + i)] = 0.25;
    }
  }
}

void NeuralCodec::set_params(const Eigen::VectorXd& params) {
  require(params.size() == params_.size(), ErrorCode::ShapeMismatch, "set_params: parameter count mismatch");
  params_ = params;
}

std::pair<std::size_t, std::size_t> NeuralCodec::layer_param_range(std::size_t l) const {
  require(l < layers_.size(), ErrorCode::InvalidArgument, "layer index out of range");
  return {layers_[l].offset, layers_[l].size()};
}

Eigen::Map<const Eigen::MatrixXd> NeuralCodec::weights(const Layer& layer) const {
  return {params_.data() + layer.offset, static_cast<Eigen::Index>(layer.out), static_cast<Eigen::Index>(layer.in)};
}

Eigen::Map<const Eigen::VectorXd> NeuralCodec::bias(const Layer& layer) const {
  return {params_.data() + layer.offset + layer.out * layer.in, static_cast<Eigen::Index>(layer.out)};
}

Eigen::Map<const Eigen::VectorXd> NeuralCodec::slopes(const Layer& layer) const {
  return {params_.data() + layer.offset + layer.out * layer.in + layer.out, static_cast<Eigen::Index>(layer.out)};
}

Eigen::MatrixXd NeuralCodec::run_layers(Eigen::MatrixXd h, std::size_t first, std::size_t last) const {
  for (std::size_t l = first; l < last; ++l) {
    const Layer& layer = layers_[l];
    Eigen::MatrixXd a = weights(layer) * h;
    a.colwise() += bias(layer);
    if (layer.activated) {
      const auto s = slopes(layer);
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
          if (a(i, j) <= 0.0) a(i, j) *= s[i];
    }
    h = std::move(a);
  }
  return h;
}

Eigen::VectorXd NeuralCodec::encode(const Eigen::VectorXd& x) const {
  require(static_cast<std::size_t>(x.size()) == input_dim(), ErrorCode::ShapeMismatch, "NeuralCodec::encode: size mismatch");
  Eigen::VectorXd z = run_layers(x, 0, layers_.size() / 2);
  require_finite(z, "NeuralCodec::encode");
  return z;
}

Eigen::VectorXd NeuralCodec::decode(const Eigen::VectorXd& z) const {
  require(static_cast<std::size_t>(z.size()) == latent_dim(), ErrorCode::ShapeMismatch, "NeuralCodec::decode: size mismatch");
  Eigen::VectorXd x = run_layers(z, layers_.size() / 2, layers_.size());
  require_finite(x, "NeuralCodec::decode");
  return x;
}

Eigen::MatrixXd NeuralCodec::reconstruct(const Eigen::MatrixXd& xs) const {
  require(static_cast<std::size_t>(xs.rows()) == input_dim(), ErrorCode::ShapeMismatch, "reconstruct: row count");
  return run_layers(xs, 0, layers_.size());
}

namespace {

double batch_loss(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets, LossKind kind) {
  const double count = static_cast<double>(out.size());
  if (count == 0.0) return 0.0;
  const Eigen::MatrixXd err = out - targets;
  return kind == LossKind::L2 ? err.squaredNorm() / count : err.cwiseAbs().sum() / count;
}

}  // namespace

double NeuralCodec::loss(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, LossKind kind) const {
  require(inputs.rows() == targets.rows() && inputs.cols() == targets.cols(), ErrorCode::ShapeMismatch,
          "loss: input/target shapes differ");
  return batch_loss(reconstruct(inputs), targets, kind);
}

double NeuralCodec::loss_and_gradient(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, LossKind kind,
                                      Eigen::VectorXd& grad) const {
  require(inputs.rows() == targets.rows() && inputs.cols() == targets.cols(), ErrorCode::ShapeMismatch,
          "loss_and_gradient: input/target shapes differ");
  require(static_cast<std::size_t>(inputs.rows()) == input_dim(), ErrorCode::ShapeMismatch,
          "loss_and_gradient: row count");
  grad = Eigen::VectorXd::Zero(params_.size());
  if (inputs.cols() == 0) return 0.0;

  // Forward pass keeping each layer's input and pre-activation.
  std::vector<Eigen::MatrixXd> layer_in(layers_.size());
  std::vector<Eigen::MatrixXd> pre(layers_.size());
  Eigen::MatrixXd h = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    layer_in[l] = h;
    Eigen::MatrixXd a = weights(layer) * h;
    a.colwise() += bias(layer);
    pre[l] = a;
    if (layer.activated) {
      const auto s = slopes(layer);
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
          if (a(i, j) <= 0.0) a(i, j) *= s[i];
    }
    h = std::move(a);
  }

  const double count = static_cast<double>(h.size());
  const Eigen::MatrixXd err = h - targets;
  const double value = batch_loss(h, targets, kind);
  Eigen::MatrixXd g = kind == LossKind::L2 ? Eigen::MatrixXd(err * (2.0 / count))
                                           : Eigen::MatrixXd(err.unaryExpr([](double e) {
                                               return e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0);
                                             }) / count);

  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const auto out = static_cast<Eigen::Index>(layer.out);
    const auto in = static_cast<Eigen::Index>(layer.in);
    if (layer.activated) {
      const auto s = slopes(layer);
      const Eigen::MatrixXd& a = pre[l];
      Eigen::Map<Eigen::VectorXd> gs(grad.data() + layer.offset + layer.out * layer.in + layer.out, out);
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < out; ++i) {
          if (a(i, j) <= 0.0) {
            gs[i] += a(i, j) * g(i, j);
            g(i, j) *= s[i];
          }
        }
      }
    }
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + layer.offset, out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + layer.offset + layer.out * layer.in, out);
    gw.noalias() = g * layer_in[l].transpose();
    gb = g.rowwise().sum();
    if (l > 0) g = weights(layer).transpose() * g;
  }
  return value;
}

// ---------------------------------------------------------------------------
// Diagnostics

double grad_check(const NeuralCodec& codec, const Eigen::VectorXd& sample, double h, const GradientFn& gradient,
                  std::uint64_t seed) {
  require(h > 0.0, ErrorCode::InvalidArgument, "grad_check: h must be positive");
  const std::size_t count = codec.param_count();
  if (count == 0) return 0.0;

  Eigen::VectorXd analytic;
  if (gradient) {
    analytic = gradient(codec, sample);
    require(analytic.size() == codec.params().size(), ErrorCode::ShapeMismatch, "grad_check: gradient size");
  } else {
    codec.loss_and_gradient(sample, sample, LossKind::L2, analytic);
  }

  std::vector<std::size_t> which;
  constexpr std::size_t kMaxChecked = 500;
  if (count <= kMaxChecked) {
    which.resize(count);
    for (std::size_t i = 0; i < count; ++i) which[i] = i;
  } else {
    Rng rng(seed, "grad-check");
    which = sample_without_replacement(count, kMaxChecked, rng);
  }

  NeuralCodec probe = codec;
  Eigen::VectorXd fd(static_cast<Eigen::Index>(which.size()));
  for (std::size_t k = 0; k < which.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(which[k]);
    const double orig = probe.params()[i];
    probe.params()[i] = orig + h;
    const double up = probe.loss(sample, sample);
    probe.params()[i] = orig - h;
    const double down = probe.loss(sample, sample);
    probe.params()[i] = orig;
    fd[static_cast<Eigen::Index>(k)] = (up - down) / (2.0 * h);
  }
  const double floor = 1e-4 * std::max(1.0, fd.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (std::size_t k = 0; k < which.size(); ++k) {
    const double a = analytic[static_cast<Eigen::Index>(which[k])];
    const double f = fd[static_cast<Eigen::Index>(k)];
    const double denom = std::max({std::abs(a), std::abs(f), floor});
    worst = std::max(worst, std::abs(a - f) / denom);
  }
  return worst;
}

LatentGram latent_gram(const Codec& codec, const FieldSeries& data) {
  require(!data.empty(), ErrorCode::InvalidArgument, "latent_gram: empty data");
  const Eigen::MatrixXd z = codec.encode_batch(data.data());
  LatentGram out;
  out.gram = kernels::serial::matmul(z, z.transpose()) / static_cast<double>(z.cols());
  const Eigen::Index m = out.gram.rows();
  Eigen::MatrixXd normalized(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double di = out.gram(i, i);
      const double dj = out.gram(j, j);
      normalized(i, j) = (di > 0.0 && dj > 0.0) ? out.gram(i, j) / std::sqrt(di * dj) : 0.0;
    }
  }
  out.score = (normalized - Eigen::MatrixXd::Identity(m, m)).norm() / static_cast<double>(m);
  return out;
}

}  // namespace vda
