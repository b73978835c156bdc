#include "vda/kernels.hpp"

#include <omp.h>

#include <string>

#include "vda/error.hpp"

namespace vda::kernels {
namespace {

constexpr Eigen::Index kRowBlock = 512;

void check_cols(const Eigen::MatrixXd& a, Eigen::Index len, const char* what) {
  require(a.cols() == len, ErrorCode::ShapeMismatch,
          std::string(what) + ": inner dimension mismatch");
}

void check_rows(const Eigen::MatrixXd& a, Eigen::Index len, const char* what) {
  require(a.rows() == len, ErrorCode::ShapeMismatch,
          std::string(what) + ": inner dimension mismatch");
}

void check_low_rank(const Eigen::MatrixXd& u, const Eigen::VectorXd& sigma,
                    const Eigen::MatrixXd& wt, std::size_t tau,
                    const std::vector<std::size_t>& rows) {
  require(static_cast<Eigen::Index>(tau) <= u.cols() &&
              static_cast<Eigen::Index>(tau) <= sigma.size() &&
              static_cast<Eigen::Index>(tau) <= wt.rows(),
          ErrorCode::ShapeMismatch, "low_rank_rows: tau exceeds factor sizes");
  for (std::size_t r : rows) {
    require(static_cast<Eigen::Index>(r) < u.rows(), ErrorCode::InvalidArgument,
            "low_rank_rows: row index out of range");
  }
}

// Accumulates rows [begin, end) of y = A x, column by column.
void gemv_block(const Eigen::MatrixXd& a, const Eigen::VectorXd& x, Eigen::VectorXd& y,
                Eigen::Index begin, Eigen::Index end) {
  for (Eigen::Index i = begin; i < end; ++i) y[i] = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double xj = x[j];
    const double* col = a.data() + j * a.rows();
    for (Eigen::Index i = begin; i < end; ++i) y[i] += col[i] * xj;
  }
}

double dot_cols(const double* a, const double* b, Eigen::Index n) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void low_rank_row(const Eigen::MatrixXd& u, const Eigen::VectorXd& sigma, const Eigen::MatrixXd& wt,
                  std::size_t tau, std::size_t src, Eigen::MatrixXd& out, Eigen::Index dst) {
  const Eigen::Index cols = wt.cols();
  for (Eigen::Index j = 0; j < cols; ++j) out(dst, j) = 0.0;
  for (std::size_t k = 0; k < tau; ++k) {
    const double coeff = u(static_cast<Eigen::Index>(src), static_cast<Eigen::Index>(k)) * sigma[static_cast<Eigen::Index>(k)];
    for (Eigen::Index j = 0; j < cols; ++j) out(dst, j) += coeff * wt(static_cast<Eigen::Index>(k), j);
  }
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

Eigen::VectorXd gemv(const Eigen::MatrixXd& a, const Eigen::VectorXd& x) {
  check_cols(a, x.size(), "gemv");
  Eigen::VectorXd y(a.rows());
  const Eigen::Index blocks = (a.rows() + kRowBlock - 1) / kRowBlock;
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kRowBlock;
    const Eigen::Index end = std::min(a.rows(), begin + kRowBlock);
    gemv_block(a, x, y, begin, end);
  }
  return y;
}

Eigen::VectorXd gemv_t(const Eigen::MatrixXd& a, const Eigen::VectorXd& x) {
  check_rows(a, x.size(), "gemv_t");
  Eigen::VectorXd y(a.cols());
  const Eigen::Index n = a.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < a.cols(); ++j) y[j] = dot_cols(a.data() + j * n, x.data(), n);
  return y;
}

Eigen::MatrixXd matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_cols(a, b.rows(), "matmul");
  Eigen::MatrixXd c(a.rows(), b.cols());
  const Eigen::Index blocks = (a.rows() + kRowBlock - 1) / kRowBlock;
#pragma omp parallel for collapse(2) schedule(static)
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    for (Eigen::Index blk = 0; blk < blocks; ++blk) {
      const Eigen::Index begin = blk * kRowBlock;
      const Eigen::Index end = std::min(a.rows(), begin + kRowBlock);
      double* out = c.data() + j * a.rows();
      for (Eigen::Index i = begin; i < end; ++i) out[i] = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) {
        const double bkj = b(k, j);
        const double* col = a.data() + k * a.rows();
        for (Eigen::Index i = begin; i < end; ++i) out[i] += col[i] * bkj;
      }
    }
  }
  return c;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& a) {
  const Eigen::Index s = a.cols();
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd g(s, s);
#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = i; j < s; ++j) {
      const double v = dot_cols(a.data() + i * n, a.data() + j * n, n);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Eigen::MatrixXd low_rank_rows(const Eigen::MatrixXd& u, const Eigen::VectorXd& sigma,
                              const Eigen::MatrixXd& wt, std::size_t tau,
                              const std::vector<std::size_t>& rows) {
  check_low_rank(u, sigma, wt, tau, rows);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), wt.cols());
  const auto count = static_cast<Eigen::Index>(rows.size());
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < count; ++r) low_rank_row(u, sigma, wt, tau, rows[static_cast<std::size_t>(r)], out, r);
  return out;
}

namespace serial {

Eigen::VectorXd gemv(const Eigen::MatrixXd& a, const Eigen::VectorXd& x) {
  check_cols(a, x.size(), "gemv");
  Eigen::VectorXd y(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Eigen::VectorXd gemv_t(const Eigen::MatrixXd& a, const Eigen::VectorXd& x) {
  check_rows(a, x.size(), "gemv_t");
  Eigen::VectorXd y(a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) s += a(i, j) * x[i];
    y[j] = s;
  }
  return y;
}

Eigen::MatrixXd matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_cols(a, b.rows(), "matmul");
  Eigen::MatrixXd c(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd g(a.cols(), a.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const Eigen::Index p = std::min(i, j);
      const Eigen::Index q = std::max(i, j);
      double s = 0.0;
      for (Eigen::Index r = 0; r < a.rows(); ++r) s += a(r, p) * a(r, q);
      g(i, j) = s;
    }
  }
  return g;
}

Eigen::MatrixXd low_rank_rows(const Eigen::MatrixXd& u, const Eigen::VectorXd& sigma,
                              const Eigen::MatrixXd& wt, std::size_t tau,
                              const std::vector<std::size_t>& rows) {
  check_low_rank(u, sigma, wt, tau, rows);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), wt.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Eigen::Index j = 0; j < wt.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < tau; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        s += u(static_cast<Eigen::Index>(rows[r]), kk) * sigma[kk] * wt(kk, j);
      }
      out(static_cast<Eigen::Index>(r), j) = s;
    }
  }
  return out;
}

}  // namespace serial
}  // namespace vda::kernels
