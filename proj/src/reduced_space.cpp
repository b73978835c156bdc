#include "vda/reduced_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vda/error.hpp"
#include "vda/kernels.hpp"

namespace vda {
namespace {

constexpr int kMaxJacobiSweeps = 30;
constexpr double kJacobiTol = 1e-15;

// One-sided Jacobi (Hestenes) on the columns of b, accumulating the same
// rotations into w so that b * w^T is preserved.
void jacobi_polish(Eigen::MatrixXd& b, Eigen::MatrixXd& w) {
  const Eigen::Index s = b.cols();
  Eigen::VectorXd norms(s);
  for (Eigen::Index j = 0; j < s; ++j) norms[j] = b.col(j).squaredNorm();
  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < s; ++p) {
      for (Eigen::Index q = p + 1; q < s; ++q) {
        const double alpha = norms[p];
        const double beta = norms[q];
        if (alpha == 0.0 || beta == 0.0) continue;
        const double gamma = b.col(p).dot(b.col(q));
        if (std::abs(gamma) <= kJacobiTol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = c * t;
        for (Eigen::Index i = 0; i < b.rows(); ++i) {
          const double bp = b(i, p);
          const double bq = b(i, q);
          b(i, p) = c * bp - sn * bq;
          b(i, q) = sn * bp + c * bq;
        }
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
          const double wp = w(i, p);
          const double wq = w(i, q);
          w(i, p) = c * wp - sn * wq;
          w(i, q) = sn * wp + c * wq;
        }
        norms[p] = b.col(p).squaredNorm();
        norms[q] = b.col(q).squaredNorm();
      }
    }
    if (!rotated) break;
  }
}

// Replaces column `col` of u by a unit vector orthogonal to every column in
// `keep`. The canonical vector e_i with the largest residual is used; its
// squared residual is 1 - sum_k u(i, k)^2, at least (n - |keep|) / n for the best i.
void complete_column(Eigen::MatrixXd& u, Eigen::Index col, const std::vector<Eigen::Index>& keep) {
  const Eigen::Index n = u.rows();
  Eigen::VectorXd residual = Eigen::VectorXd::Ones(n);
  for (Eigen::Index k : keep) residual -= u.col(k).cwiseAbs2();
  Eigen::Index best = 0;
  residual.maxCoeff(&best);
  Eigen::VectorXd v = Eigen::VectorXd::Unit(n, best);
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index k : keep) v -= u.col(k).dot(v) * u.col(k);
  }
  const double norm = v.norm();
  require(norm > 1e-8, ErrorCode::InvalidArgument, "compute_svd: cannot complete an orthonormal basis");
  u.col(col) = v / norm;
}

}  // namespace

BackgroundMatrix build_background_matrix(const FieldSeries& train) {
  require(train.steps() >= 2, ErrorCode::InvalidArgument, "background matrix needs at least two samples");
  BackgroundMatrix bg;
  bg.mean = column_mean(train.data());
  bg.V = train.data();
  bg.V.colwise() -= bg.mean;
  return bg;
}

SvdFactors compute_svd(const Eigen::MatrixXd& V) {
  const Eigen::Index n = V.rows();
  const Eigen::Index s = V.cols();
  require(s >= 1, ErrorCode::InvalidArgument, "compute_svd: empty matrix");
  require(n >= s, ErrorCode::InvalidArgument, "compute_svd: thin SVD requires n >= S");
  require(V.allFinite(), ErrorCode::NonFinite, "compute_svd: non-finite entries");

  const Eigen::MatrixXd gram = kernels::gram(V);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  require(eig.info() == Eigen::Success, ErrorCode::NonFinite, "compute_svd: eigendecomposition failed");
  // Eigen returns ascending eigenvalues; reverse to descending.
  Eigen::MatrixXd w = eig.eigenvectors().rowwise().reverse();

  Eigen::MatrixXd b = kernels::matmul(V, w);
  jacobi_polish(b, w);

  Eigen::VectorXd norms(s);
  for (Eigen::Index j = 0; j < s; ++j) norms[j] = b.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(s));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) { return norms[a] > norms[c]; });

  SvdFactors f;
  f.U.resize(n, s);
  f.sigma.resize(s);
  Eigen::MatrixXd w_sorted(s, s);
  for (Eigen::Index j = 0; j < s; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    f.sigma[j] = norms[src];
    f.U.col(j) = b.col(src);
    w_sorted.col(j) = w.col(src);
  }

  const double cutoff = kSingularZeroTol * f.sigma[0];
  std::vector<Eigen::Index> kept;
  std::vector<Eigen::Index> zero;
  for (Eigen::Index j = 0; j < s; ++j) {
    if (f.sigma[j] > cutoff && f.sigma[j] > 0.0) {
      f.U.col(j) /= f.sigma[j];
      kept.push_back(j);
    } else {
      f.sigma[j] = 0.0;
      zero.push_back(j);
    }
  }
  for (Eigen::Index j : zero) {
    complete_column(f.U, j, kept);
    kept.push_back(j);
  }

  for (Eigen::Index j = 0; j < s; ++j) {
    Eigen::Index arg = 0;
    w_sorted.col(j).cwiseAbs().maxCoeff(&arg);
    if (w_sorted(arg, j) < 0.0) {
      w_sorted.col(j) = -w_sorted.col(j);
      f.U.col(j) = -f.U.col(j);
    }
  }
  f.Wt = w_sorted.transpose();
  return f;
}

SvdFactors compute_svd(const BackgroundMatrix& background) { return compute_svd(background.V); }

TruncatedBasis::TruncatedBasis(SvdFactors factors, std::size_t tau) : factors_(std::move(factors)), tau_(tau) {
  const std::size_t s = factors_.rank_capacity();
  require(tau_ >= 1 && tau_ <= s, ErrorCode::InvalidArgument,
          "truncation tau=" + std::to_string(tau_) + " outside [1, S=" + std::to_string(s) + "]");
  require(factors_.U.cols() == static_cast<Eigen::Index>(s) && factors_.Wt.rows() == static_cast<Eigen::Index>(s) &&
              factors_.Wt.cols() == static_cast<Eigen::Index>(s),
          ErrorCode::ShapeMismatch, "TruncatedBasis: inconsistent factor shapes");
}

Eigen::VectorXd TruncatedBasis::apply_basis(const Eigen::VectorXd& w) const {
  require(static_cast<std::size_t>(w.size()) == samples(), ErrorCode::ShapeMismatch, "apply_basis: weight size mismatch");
  const auto t = static_cast<Eigen::Index>(tau_);
  const Eigen::VectorXd coeff =
      factors_.sigma.head(t).cwiseProduct(factors_.Wt.topRows(t) * w);
  const Eigen::MatrixXd u_tau = factors_.U.leftCols(t);
  return kernels::gemv(u_tau, coeff);
}

Eigen::VectorXd TruncatedBasis::apply_pinv(const Eigen::VectorXd& x) const {
  require(static_cast<std::size_t>(x.size()) == state_size(), ErrorCode::ShapeMismatch, "apply_pinv: state size mismatch");
  const auto t = static_cast<Eigen::Index>(tau_);
  const double cutoff = kSingularZeroTol * factors_.sigma[0];
  Eigen::VectorXd coeff = factors_.U.leftCols(t).transpose() * x;
  for (Eigen::Index i = 0; i < t; ++i) {
    const double s = factors_.sigma[i];
    coeff[i] = (s > cutoff && s > 0.0) ? coeff[i] / s : 0.0;
  }
  return factors_.Wt.topRows(t).transpose() * coeff;
}

Eigen::MatrixXd TruncatedBasis::reconstruct() const {
  std::vector<std::size_t> rows(state_size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return kernels::low_rank_rows(factors_.U, factors_.sigma, factors_.Wt, tau_, rows);
}

TruncatedBasis truncate(SvdFactors factors, std::size_t tau) { return TruncatedBasis(std::move(factors), tau); }

std::size_t select_tau_sqrt_sigma1(const Eigen::VectorXd& sigma) {
  require(sigma.size() > 0, ErrorCode::InvalidArgument, "select_tau: no singular values");
  const double threshold = std::sqrt(sigma[0]);
  std::size_t tau = 1;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma[i] >= threshold) tau = static_cast<std::size_t>(i) + 1;
  }
  return tau;
}

Eigen::MatrixXd precompute_HV(const ObservationOperator& H, const TruncatedBasis& basis) {
  require(H.state_size() == basis.state_size(), ErrorCode::ShapeMismatch,
          "precompute_HV: operator and basis state sizes differ");
  const auto& f = basis.factors();
  return kernels::low_rank_rows(f.U, f.sigma, f.Wt, basis.tau(), H.indices());
}

}  // namespace vda
