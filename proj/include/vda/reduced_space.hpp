#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "vda/field.hpp"
#include "vda/observation.hpp"

namespace vda {

/// V = [x_1 - mean, ..., x_S - mean] (n x S). B = V V^T is never formed.
struct BackgroundMatrix {
  Eigen::MatrixXd V;
  Eigen::VectorXd mean;

  std::size_t samples() const { return static_cast<std::size_t>(V.cols()); }
  std::size_t state_size() const { return static_cast<std::size_t>(V.rows()); }
};

/// Mean = column mean of the training states, V = states minus mean.
BackgroundMatrix build_background_matrix(const FieldSeries& train);

/// Thin SVD V = U diag(sigma) Wt with U n x S orthonormal, sigma non-increasing.
struct SvdFactors {
  Eigen::MatrixXd U;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd Wt;

  std::size_t rank_capacity() const { return static_cast<std::size_t>(sigma.size()); }
};

/// Singular values at or below this fraction of sigma_1 count as zero.
inline constexpr double kSingularZeroTol = 1e-12;

/// Eigen-decomposes the S x S Gram matrix V^T V, then polishes V W with
/// one-sided Jacobi rotations so that U stays orthonormal for small singular
/// values. Columns of U belonging to zero singular values are completed to an
/// orthonormal set. Each right singular vector's largest-magnitude entry is
/// made positive. Requires n >= S.
SvdFactors compute_svd(const Eigen::MatrixXd& V);
SvdFactors compute_svd(const BackgroundMatrix& background);

/// Keeps the first tau modes of the factors, 1 <= tau <= S.
class TruncatedBasis {
 public:
  TruncatedBasis(SvdFactors factors, std::size_t tau);

  const SvdFactors& factors() const { return factors_; }
  std::size_t tau() const { return tau_; }
  std::size_t state_size() const { return static_cast<std::size_t>(factors_.U.rows()); }
  std::size_t samples() const { return static_cast<std::size_t>(factors_.Wt.cols()); }

  /// V_tau w
  Eigen::VectorXd apply_basis(const Eigen::VectorXd& w) const;
  /// V_tau^+ x = W Sigma_tau^+ U^T x; singular values <= kSingularZeroTol * sigma_1
  /// are not inverted.
  Eigen::VectorXd apply_pinv(const Eigen::VectorXd& x) const;
  /// Dense V_tau (n x S).
  Eigen::MatrixXd reconstruct() const;

 private:
  SvdFactors factors_;
  std::size_t tau_;
};

TruncatedBasis truncate(SvdFactors factors, std::size_t tau);

/// Largest tau with sigma_tau >= sqrt(sigma_1); at least 1.
std::size_t select_tau_sqrt_sigma1(const Eigen::VectorXd& sigma);

/// H V_tau (M x S). For a selection operator the rows are bit-identical to the
/// corresponding rows of TruncatedBasis::reconstruct().
Eigen::MatrixXd precompute_HV(const ObservationOperator& H, const TruncatedBasis& basis);

/// VDAB checkpoint: "VDAB", u32 version, u64 n, u64 S, u32 tau, then U (n*S),
/// sigma (S), Wt (S*S), mean (n) as little-endian binary64, column-major.
struct BasisCheckpoint {
  SvdFactors factors;
  std::size_t tau = 0;
  Eigen::VectorXd mean;
};
void save_basis(const BasisCheckpoint& basis, const std::filesystem::path& path);
BasisCheckpoint load_basis(const std::filesystem::path& path);

}  // namespace vda
