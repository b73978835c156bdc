#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "vda/cost.hpp"

namespace vda {

struct LbfgsOptions {
  std::size_t memory = 10;
  double grad_tol = 1e-8;  // on ||grad||_inf
  std::size_t max_iterations = 200;
  double c1 = 1e-4;
  double c2 = 0.9;
  double initial_step = 1.0;
  std::size_t max_line_search = 40;
  void validate() const;
};

enum class Termination { GradientTolerance, IterationCap, LineSearchFailure };

const char* to_string(Termination t);

struct LbfgsResult {
  Eigen::VectorXd w;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::vector<double> cost_history;       // one entry per accepted iterate, starting at w0
  std::vector<double> grad_norm_history;  // ||grad||_inf at the same iterates
  Termination termination = Termination::GradientTolerance;
  bool converged = false;
};

using CostGradFn = std::function<CostGrad(const Eigen::VectorXd&)>;

/// Limited-memory BFGS with a strong-Wolfe line search (bracketing plus
/// safeguarded cubic interpolation). On line-search failure the best iterate
/// found so far is returned and the result is flagged as not converged.
LbfgsResult minimize_lbfgs(const CostGradFn& fn, Eigen::VectorXd w0, const LbfgsOptions& opts = {});

}  // namespace vda
