#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace vda {

/// Linear observation operator H: either the identity (M = n) or a selection
/// of sorted, unique state locations. The adjoint scatters back with zero fill.
class ObservationOperator {
 public:
  enum class Kind { Identity, RowSubsample };

  static ObservationOperator identity(std::size_t n);
  static ObservationOperator subsample(std::size_t n, std::vector<std::size_t> indices);

  Kind kind() const { return kind_; }
  bool is_identity() const { return kind_ == Kind::Identity; }
  std::size_t state_size() const { return n_; }
  std::size_t obs_count() const { return indices_.size(); }
  /// Observed location indices; 0..n-1 for the identity.
  const std::vector<std::size_t>& indices() const { return indices_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd adjoint(const Eigen::VectorXd& y) const;

 private:
  Kind kind_ = Kind::Identity;
  std::size_t n_ = 0;
  std::vector<std::size_t> indices_;
};

/// Observations y with R = sigma0^2 I, or diag(obs_std^2) when obs_std is set.
struct ObservationSet {
  ObservationOperator op;
  Eigen::VectorXd values;
  double sigma0 = 0.005;
  std::optional<Eigen::VectorXd> obs_std;
};

/// M distinct locations drawn uniformly without replacement; M = n yields the
/// identity operator.
ObservationOperator draw_observation_operator(std::size_t n, std::size_t m, std::uint64_t seed);

/// y = H x_truth, plus N(0, sigma0^2) noise when `add_noise` is set.
ObservationSet observe(const ObservationOperator& op, const Eigen::VectorXd& x_truth, double sigma0,
                       std::uint64_t noise_seed, bool add_noise);

ObservationSet build_observations(const Eigen::VectorXd& x_truth, std::size_t m, double sigma0,
                                  std::uint64_t seed, bool add_noise = false);

/// d = y - H x_b
Eigen::VectorXd misfit(const ObservationSet& obs, const Eigen::VectorXd& x_b);

}  // namespace vda
