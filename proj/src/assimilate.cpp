#include "vda/assimilate.hpp"

#include <chrono>
#include <cmath>

#include "vda/error.hpp"
#include "vda/kernels.hpp"

namespace vda {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

// Runs the configured solver on `cost` and fills the optimizer fields.
void minimize(const QuadraticCost& cost, const SolveOptions& opts, Solution& sol) {
  if (opts.solver == Solver::ClosedForm) {
    const ClosedFormResult cf = solve_closed_form(normal_equations(cost));
    sol.w = cf.w;
    const CostGrad cg = cost_grad(cost, sol.w);
    sol.final_cost = cg.value;
    sol.cost_history = {cost_grad(cost, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cost.dim()))).value, cg.value};
    sol.grad_norm_history = {std::nan(""), cg.grad.cwiseAbs().maxCoeff()};
    sol.iterations = 0;
    sol.evaluations = 0;
    sol.converged = true;
    sol.termination = Termination::GradientTolerance;
    return;
  }
  LbfgsResult r = minimize_lbfgs([&cost](const Eigen::VectorXd& w) { return cost_grad(cost, w); },
                                 Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cost.dim())), opts.lbfgs);
  sol.w = std::move(r.w);
  sol.final_cost = r.value;
  sol.cost_history = std::move(r.cost_history);
  sol.grad_norm_history = std::move(r.grad_norm_history);
  sol.iterations = r.iterations;
  sol.evaluations = r.evaluations;
  sol.converged = r.converged;
  sol.termination = r.termination;
}

Eigen::VectorXd finish_state(const Eigen::VectorXd& mean, const Eigen::VectorXd& dx,
                             const std::optional<NormStats>& stats) {
  Eigen::VectorXd x = mean + dx;
  return stats ? invert_normalization(x, *stats) : x;
}

}  // namespace

Eigen::MatrixXd latent_background(const Codec& codec, const BackgroundMatrix& background) {
  require(background.state_size() == codec.input_dim(), ErrorCode::ShapeMismatch,
          "latent_background: codec input size differs from the state size");
  return codec.encode_batch(background.V);
}

Eigen::VectorXd latent_misfit(const Codec& codec, const ObservationSet& obs) {
  require(obs.op.is_identity(), ErrorCode::Unsupported,
          "bi-reduced assimilation needs full-state observations (H = I)");
  require(obs.op.state_size() == codec.input_dim(), ErrorCode::ShapeMismatch,
          "latent_misfit: codec input size differs from the observation size");
  return codec.encode(obs.values);
}

Eigen::VectorXd restore_mono(const TruncatedBasis& basis, const Eigen::VectorXd& w) { return basis.apply_basis(w); }

Eigen::VectorXd restore_bi(const Codec& codec, const Eigen::MatrixXd& v_l, const Eigen::VectorXd& w_l) {
  require(v_l.rows() == static_cast<Eigen::Index>(codec.latent_dim()) && v_l.cols() == w_l.size(),
          ErrorCode::ShapeMismatch, "restore_bi: shape mismatch");
  return codec.decode(kernels::serial::gemv(v_l, w_l));
}

// ---------------------------------------------------------------------------

MonoAssimilator::MonoAssimilator(TruncatedBasis basis, Eigen::VectorXd mean, std::optional<NormStats> stats)
    : basis_(std::move(basis)), mean_(std::move(mean)), stats_(std::move(stats)) {
  require(static_cast<std::size_t>(mean_.size()) == basis_.state_size(), ErrorCode::ShapeMismatch,
          "MonoAssimilator: mean size differs from the basis");
  if (stats_) {
    require(stats_->mean.size() == mean_.size() && stats_->std.size() == mean_.size(), ErrorCode::ShapeMismatch,
            "MonoAssimilator: normalization statistics size");
  }
}

MonoProblem MonoAssimilator::prepare(const ObservationSet& obs) const {
  require(obs.op.state_size() == basis_.state_size(), ErrorCode::ShapeMismatch,
          "mono: observation operator does not match the state size");
  MonoProblem p;
  p.cost.op = precompute_HV(obs.op, basis_);
  p.cost.misfit = misfit(obs, mean_);
  p.cost.sigma = obs.sigma0;
  if (obs.obs_std) p.cost.inv_variance = obs.obs_std->array().square().inverse().matrix();
  p.cost.validate();
  return p;
}

Solution MonoAssimilator::solve(const MonoProblem& problem, const SolveOptions& opts) const {
  Solution sol;
  const auto t0 = Clock::now();
  minimize(problem.cost, opts, sol);
  const auto t1 = Clock::now();
  const Eigen::VectorXd dx = restore_mono(basis_, sol.w);
  sol.x_da = finish_state(mean_, dx, stats_);
  const auto t2 = Clock::now();
  sol.minimize_s = seconds_between(t0, t1);
  sol.restore_s = seconds_between(t1, t2);
  sol.total_s = seconds_between(t0, t2);
  return sol;
}

Solution MonoAssimilator::assimilate(const ObservationSet& obs, const SolveOptions& opts) const {
  return solve(prepare(obs), opts);
}

// ---------------------------------------------------------------------------

BiAssimilator::BiAssimilator(std::shared_ptr<const Codec> codec, const BackgroundMatrix& background, double sigma_l,
                             std::optional<NormStats> stats)
    : codec_(std::move(codec)), mean_(background.mean), sigma_l_(sigma_l), stats_(std::move(stats)) {
  require(codec_ != nullptr, ErrorCode::InvalidArgument, "BiAssimilator: no codec");
  require(sigma_l_ > 0.0 && std::isfinite(sigma_l_), ErrorCode::InvalidArgument, "BiAssimilator: sigma_l must be positive");
  v_l_ = latent_background(*codec_, background);
  if (stats_) {
    require(stats_->mean.size() == mean_.size() && stats_->std.size() == mean_.size(), ErrorCode::ShapeMismatch,
            "BiAssimilator: normalization statistics size");
  }
}

BiProblem BiAssimilator::prepare(const ObservationSet& obs) const {
  require(obs.op.is_identity(), ErrorCode::Unsupported,
          "bi-reduced assimilation needs full-state observations (H = I)");
  require(obs.values.size() == mean_.size(), ErrorCode::ShapeMismatch, "bi: observation size differs from the state");
  ObservationSet centered = obs;
  centered.values = misfit(obs, mean_);
  BiProblem p;
  p.cost.op = v_l_;
  p.cost.misfit = latent_misfit(*codec_, centered);
  p.cost.sigma = sigma_l_;
  p.cost.validate();
  return p;
}

Solution BiAssimilator::solve(const BiProblem& problem, const SolveOptions& opts) const {
  Solution sol;
  const auto t0 = Clock::now();
  minimize(problem.cost, opts, sol);
  const auto t1 = Clock::now();
  const Eigen::VectorXd dx = restore_bi(*codec_, v_l_, sol.w);
  sol.x_da = finish_state(mean_, dx, stats_);
  const auto t2 = Clock::now();
  sol.minimize_s = seconds_between(t0, t1);
  sol.restore_s = seconds_between(t1, t2);
  sol.total_s = seconds_between(t0, t2);
  return sol;
}

Solution BiAssimilator::assimilate(const ObservationSet& obs, const SolveOptions& opts) const {
  return solve(prepare(obs), opts);
}

}  // namespace vda
