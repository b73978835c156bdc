#pragma once

#include <optional>

#include <Eigen/Dense>

namespace vda {

/// J(w) = 1/2 w^T w + 1/2 (d - G w)^T R^-1 (d - G w) with R = sigma^2 I, or
/// R^-1 = diag(inv_variance) when that vector is set. G is H V for the mono
/// problem and V_l for the bi problem; the same code serves both.
struct QuadraticCost {
  Eigen::MatrixXd op;
  Eigen::VectorXd misfit;
  double sigma = 0.005;
  std::optional<Eigen::VectorXd> inv_variance;

  std::size_t dim() const { return static_cast<std::size_t>(op.cols()); }
  void validate() const;
};

struct CostGrad {
  double value = 0.0;
  Eigen::VectorXd grad;
};

CostGrad cost_grad(const QuadraticCost& cost, const Eigen::VectorXd& w);

/// Mono-reduced problem: G = H V_tau (M x S), d = y - H x_b.
struct MonoProblem {
  QuadraticCost cost;
};

/// Bi-reduced problem: G = V_l = f(V) (m x S), d_l = f(y - x_b), sigma_l.
struct BiProblem {
  QuadraticCost cost;
};

CostGrad cost_grad_mono(const MonoProblem& p, const Eigen::VectorXd& w);
CostGrad cost_grad_bi(const BiProblem& p, const Eigen::VectorXd& w_l);

/// A = G^T R^-1 G, b = G^T R^-1 d; the minimizer solves (I + A) w = b.
struct NormalEquations {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

NormalEquations normal_equations(const QuadraticCost& cost);

struct ClosedFormResult {
  Eigen::VectorXd w;
  double residual = 0.0;  // ||(I + A) w - b||
};

/// Cholesky solve of (I + A) w = b.
ClosedFormResult solve_closed_form(const NormalEquations& eq);

/// Spectral condition number of I + A.
double condition_number(const NormalEquations& eq);

}  // namespace vda
