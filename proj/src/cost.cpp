#include "vda/cost.hpp"

#include <cmath>

#include "vda/error.hpp"
#include "vda/kernels.hpp"

namespace vda {

void QuadraticCost::validate() const {
  require(op.rows() == misfit.size(), ErrorCode::ShapeMismatch, "cost: operator rows must match misfit length");
  require(op.cols() > 0, ErrorCode::InvalidArgument, "cost: empty control space");
  require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::InvalidArgument, "cost: sigma must be positive");
  require(op.allFinite() && misfit.allFinite(), ErrorCode::NonFinite, "cost: non-finite operator or misfit");
  if (inv_variance) {
    require(inv_variance->size() == misfit.size(), ErrorCode::ShapeMismatch, "cost: weight vector length");
    require((inv_variance->array() > 0.0).all() && inv_variance->allFinite(), ErrorCode::InvalidArgument,
            "cost: weights must be positive");
  }
}

CostGrad cost_grad(const QuadraticCost& cost, const Eigen::VectorXd& w) {
  require(w.size() == cost.op.cols(), ErrorCode::ShapeMismatch, "cost_grad: weight size mismatch");
  Eigen::VectorXd r = cost.misfit - kernels::gemv(cost.op, w);
  Eigen::VectorXd weighted;
  if (cost.inv_variance) {
    weighted = r.cwiseProduct(*cost.inv_variance);
  } else {
    weighted = r / (cost.sigma * cost.sigma);
  }
  CostGrad out;
  out.value = 0.5 * w.squaredNorm() + 0.5 * r.dot(weighted);
  out.grad = w - kernels::gemv_t(cost.op, weighted);
  return out;
}

CostGrad cost_grad_mono(const MonoProblem& p, const Eigen::VectorXd& w) { return cost_grad(p.cost, w); }
CostGrad cost_grad_bi(const BiProblem& p, const Eigen::VectorXd& w_l) { return cost_grad(p.cost, w_l); }

NormalEquations normal_equations(const QuadraticCost& cost) {
  cost.validate();
  NormalEquations eq;
  if (cost.inv_variance) {
    const Eigen::MatrixXd scaled = cost.inv_variance->cwiseSqrt().asDiagonal() * cost.op;
    eq.A = kernels::gram(scaled);
    eq.b = kernels::gemv_t(cost.op, cost.misfit.cwiseProduct(*cost.inv_variance));
  } else {
    const double inv = 1.0 / (cost.sigma * cost.sigma);
    eq.A = kernels::gram(cost.op) * inv;
    eq.b = kernels::gemv_t(cost.op, cost.misfit) * inv;
  }
  return eq;
}

ClosedFormResult solve_closed_form(const NormalEquations& eq) {
  require(eq.A.rows() == eq.A.cols() && eq.A.rows() == eq.b.size(), ErrorCode::ShapeMismatch,
          "solve_closed_form: inconsistent shapes");
  require(eq.A.allFinite() && eq.b.allFinite(), ErrorCode::NonFinite, "solve_closed_form: non-finite input");
  Eigen::MatrixXd m = eq.A;
  m.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  require(llt.info() == Eigen::Success, ErrorCode::NonFinite, "solve_closed_form: I + A is not positive definite");
  ClosedFormResult out;
  out.w = llt.solve(eq.b);
  out.residual = (m * out.w - eq.b).norm();
  return out;
}

double condition_number(const NormalEquations& eq) {
  Eigen::MatrixXd m = eq.A;
  m.diagonal().array() += 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  require(eig.info() == Eigen::Success, ErrorCode::NonFinite, "condition_number: eigensolver failed");
  return eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
}

}  // namespace vda
