#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

// Dense kernels on column-major matrices. The top-level functions are
// OpenMP-parallel; vda::kernels::serial holds the straightforward reference
// versions used by the tests and the benchmark.
//
// Every parallel kernel splits work over independent outputs only, and each
// output is accumulated in the same order as its serial counterpart. Results
// are therefore bit-identical to the serial path for any thread count.

namespace vda::kernels {

/// y = A x
Eigen::VectorXd gemv(const Eigen::MatrixXd& a, const Eigen::VectorXd& x);
/// y = A^T x
Eigen::VectorXd gemv_t(const Eigen::MatrixXd& a, const Eigen::VectorXd& x);
/// C = A B
Eigen::MatrixXd matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
/// G = A^T A (symmetric, both triangles filled)
Eigen::MatrixXd gram(const Eigen::MatrixXd& a);
/// Rows `rows` of U_tau diag(sigma_tau) Wt, i.e. selected rows of the rank-tau
/// reconstruction. Each entry sums over modes k = 0..tau-1 in order.
Eigen::MatrixXd low_rank_rows(const Eigen::MatrixXd& u, const Eigen::VectorXd& sigma,
                              const Eigen::MatrixXd& wt, std::size_t tau,
                              const std::vector<std::size_t>& rows);

int max_threads();

namespace serial {

Eigen::VectorXd gemv(const Eigen::MatrixXd& a, const Eigen::VectorXd& x);
Eigen::VectorXd gemv_t(const Eigen::MatrixXd& a, const Eigen::VectorXd& x);
Eigen::MatrixXd matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
Eigen::MatrixXd gram(const Eigen::MatrixXd& a);
Eigen::MatrixXd low_rank_rows(const Eigen::MatrixXd& u, const Eigen::VectorXd& sigma,
                              const Eigen::MatrixXd& wt, std::size_t tau,
                              const std::vector<std::size_t>& rows);

}  // namespace serial
}  // namespace vda::kernels
