#include "vda/observation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vda/error.hpp"
#include "vda/rng.hpp"

namespace vda {

ObservationOperator ObservationOperator::identity(std::size_t n) {
  require(n > 0, ErrorCode::InvalidArgument, "observation operator: empty state");
  ObservationOperator op;
  op.kind_ = Kind::Identity;
  op.n_ = n;
  op.indices_.resize(n);
  std::iota(op.indices_.begin(), op.indices_.end(), std::size_t{0});
  return op;
}

ObservationOperator ObservationOperator::subsample(std::size_t n, std::vector<std::size_t> indices) {
  require(n > 0, ErrorCode::InvalidArgument, "observation operator: empty state");
  require(!indices.empty(), ErrorCode::InvalidArgument, "observation operator: no observed locations");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < n, ErrorCode::InvalidArgument,
            "observation operator: index " + std::to_string(indices[i]) + " out of range");
    require(i == 0 || indices[i] > indices[i - 1], ErrorCode::InvalidArgument,
            "observation operator: indices must be sorted and unique");
  }
  if (indices.size() == n) return identity(n);
  ObservationOperator op;
  op.kind_ = Kind::RowSubsample;
  op.n_ = n;
  op.indices_ = std::move(indices);
  return op;
}

Eigen::VectorXd ObservationOperator::apply(const Eigen::VectorXd& x) const {
  require(static_cast<std::size_t>(x.size()) == n_, ErrorCode::ShapeMismatch, "H x: state size mismatch");
  if (is_identity()) return x;
  Eigen::VectorXd y(static_cast<Eigen::Index>(indices_.size()));
  for (std::size_t i = 0; i < indices_.size(); ++i) y[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(indices_[i])];
  return y;
}

Eigen::VectorXd ObservationOperator::adjoint(const Eigen::VectorXd& y) const {
  require(static_cast<std::size_t>(y.size()) == indices_.size(), ErrorCode::ShapeMismatch,
          "H^T y: observation size mismatch");
  if (is_identity()) return y;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < indices_.size(); ++i) x[static_cast<Eigen::Index>(indices_[i])] = y[static_cast<Eigen::Index>(i)];
  return x;
}

ObservationOperator draw_observation_operator(std::size_t n, std::size_t m, std::uint64_t seed) {
  require(m >= 1 && m <= n, ErrorCode::InvalidArgument,
          "observation count M=" + std::to_string(m) + " outside [1, n=" + std::to_string(n) + "]");
  if (m == n) return ObservationOperator::identity(n);
  Rng rng(seed, "observation-locations");
  return ObservationOperator::subsample(n, sample_without_replacement(n, m, rng));
}

ObservationSet observe(const ObservationOperator& op, const Eigen::VectorXd& x_truth, double sigma0,
                       std::uint64_t noise_seed, bool add_noise) {
  require(sigma0 > 0.0 && std::isfinite(sigma0), ErrorCode::InvalidArgument, "sigma0 must be positive");
  ObservationSet obs{op, op.apply(x_truth), sigma0, std::nullopt};
  if (add_noise) {
    Rng rng(noise_seed, "observation-noise");
    for (Eigen::Index i = 0; i < obs.values.size(); ++i) obs.values[i] += sigma0 * rng.normal();
  }
  require(obs.values.allFinite(), ErrorCode::NonFinite, "observations contain non-finite values");
  return obs;
}

ObservationSet build_observations(const Eigen::VectorXd& x_truth, std::size_t m, double sigma0,
                                  std::uint64_t seed, bool add_noise) {
  const auto op = draw_observation_operator(static_cast<std::size_t>(x_truth.size()), m, seed);
  return observe(op, x_truth, sigma0, derive_seed(seed, "noise"), add_noise);
}

Eigen::VectorXd misfit(const ObservationSet& obs, const Eigen::VectorXd& x_b) {
  return obs.values - obs.op.apply(x_b);
}

}  // namespace vda
