#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "vda/codec.hpp"
#include "vda/cost.hpp"
#include "vda/field.hpp"
#include "vda/lbfgs.hpp"
#include "vda/observation.hpp"
#include "vda/reduced_space.hpp"

namespace vda {

enum class Solver { Lbfgs, ClosedForm };

struct SolveOptions {
  Solver solver = Solver::Lbfgs;
  LbfgsOptions lbfgs;
};

struct Solution {
  Eigen::VectorXd w;     // reduced (mono) or latent-space (bi) weights
  Eigen::VectorXd x_da;  // absolute state, de-normalized when stats are supplied
  std::vector<double> cost_history;
  std::vector<double> grad_norm_history;
  double final_cost = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  Termination termination = Termination::GradientTolerance;
  double minimize_s = 0.0;
  double restore_s = 0.0;
  double total_s = 0.0;  // from the start of minimization to the finished x_da
};

/// V_l = f(V), column by column.
Eigen::MatrixXd latent_background(const Codec& codec, const BackgroundMatrix& background);
/// d_l = f(y). The operator must be the identity.
Eigen::VectorXd latent_misfit(const Codec& codec, const ObservationSet& obs);

/// dx = V_tau w
Eigen::VectorXd restore_mono(const TruncatedBasis& basis, const Eigen::VectorXd& w);
/// dx = g(V_l w_l)
Eigen::VectorXd restore_bi(const Codec& codec, const Eigen::MatrixXd& latent_background, const Eigen::VectorXd& w_l);

/// Mono-reduced pipeline around a truncated basis. States handled here are in
/// normalized units; `stats` (if any) maps the result back to field units.
class MonoAssimilator {
 public:
  MonoAssimilator(TruncatedBasis basis, Eigen::VectorXd mean, std::optional<NormStats> stats = std::nullopt);

  /// Builds H V_tau and d = y - H mean. This is the offline part of the
  /// pipeline and is not timed.
  MonoProblem prepare(const ObservationSet& obs) const;
  /// Minimize, restore, add the mean, de-normalize.
  Solution solve(const MonoProblem& problem, const SolveOptions& opts = {}) const;
  Solution assimilate(const ObservationSet& obs, const SolveOptions& opts = {}) const;

  const TruncatedBasis& basis() const { return basis_; }
  const Eigen::VectorXd& mean() const { return mean_; }

 private:
  TruncatedBasis basis_;
  Eigen::VectorXd mean_;
  std::optional<NormStats> stats_;
};

/// Bi-reduced pipeline. V_l = f(V) is computed once at construction.
/// Observations must cover the full state (H = I).
class BiAssimilator {
 public:
  BiAssimilator(std::shared_ptr<const Codec> codec, const BackgroundMatrix& background, double sigma_l,
                std::optional<NormStats> stats = std::nullopt);

  /// d_l = f(y - mean); sigma_l replaces the observation sigma.
  BiProblem prepare(const ObservationSet& obs) const;
  Solution solve(const BiProblem& problem, const SolveOptions& opts = {}) const;
  Solution assimilate(const ObservationSet& obs, const SolveOptions& opts = {}) const;

  const Eigen::MatrixXd& latent_background_matrix() const { return v_l_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  double sigma_l() const { return sigma_l_; }

 private:
  std::shared_ptr<const Codec> codec_;
  Eigen::MatrixXd v_l_;
  Eigen::VectorXd mean_;
  double sigma_l_;
  std::optional<NormStats> stats_;
};

}  // namespace vda
