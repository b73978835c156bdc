#include "vda/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "vda/error.hpp"

namespace vda {

void LbfgsOptions::validate() const {
  require(memory >= 1, ErrorCode::InvalidArgument, "L-BFGS memory must be at least 1");
  require(grad_tol >= 0.0, ErrorCode::InvalidArgument, "L-BFGS gradient tolerance must be non-negative");
  require(c1 > 0.0 && c1 < c2 && c2 < 1.0, ErrorCode::InvalidArgument, "L-BFGS needs 0 < c1 < c2 < 1");
  require(initial_step > 0.0, ErrorCode::InvalidArgument, "L-BFGS initial step must be positive");
  require(max_line_search >= 1, ErrorCode::InvalidArgument, "L-BFGS needs at least one line-search evaluation");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::GradientTolerance: return "gradient_tolerance";
    case Termination::IterationCap: return "iteration_cap";
    case Termination::LineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

namespace {

struct Point {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;  // directional derivative
  Eigen::VectorXd w;
  Eigen::VectorXd grad;
};

// Minimizer of the cubic through (a, fa, da) and (b, fb, db); NaN if none.
double cubic_min(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double denom = db - da + 2.0 * d2;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return b - (b - a) * (db + d2 - d1) / denom;
}

class LineSearch {
 public:
  LineSearch(const CostGradFn& fn, const Eigen::VectorXd& w, const Eigen::VectorXd& dir, double f0, double d0,
             const LbfgsOptions& opts)
      : fn_(fn), w_(w), dir_(dir), f0_(f0), d0_(d0), opts_(opts) {}

  // Returns true with `out` set to a strong-Wolfe point. On failure `out`
  // holds the lowest sufficient-decrease point seen (step 0 if none).
  bool run(double step, Point& out) {
    Point prev{0.0, f0_, d0_, w_, {}};
    best_ = prev;
    for (std::size_t i = 0; evals_ < opts_.max_line_search; ++i) {
      Point cur = eval(step);
      if (!std::isfinite(cur.value) || !sufficient(cur) || (i > 0 && cur.value >= prev.value && !flat(cur))) {
        return zoom(prev, cur, out);
      }
      if (std::abs(cur.slope) <= -opts_.c2 * d0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.slope >= 0.0) return zoom(cur, prev, out);
      prev = std::move(cur);
      step *= 2.0;
    }
    out = best_;
    return false;
  }

  std::size_t evaluations() const { return evals_; }

 private:
  Point eval(double step) {
    Point p;
    p.step = step;
    p.w = w_ + step * dir_;
    CostGrad cg = fn_(p.w);
    ++evals_;
    p.value = cg.value;
    p.grad = std::move(cg.grad);
    p.slope = p.grad.dot(dir_);
    if (std::isfinite(p.value) && sufficient(p) && p.value < best_.value) best_ = p;
    return p;
  }

  // Close to a minimizer, cost differences drop below rounding error and the
  // Armijo test becomes noise. Within that band the slope decides instead
  // (approximate Wolfe condition).
  bool flat(const Point& p) const { return std::abs(p.value - f0_) <= kFlatTol * std::abs(f0_); }

  bool sufficient(const Point& p) const {
    if (p.value <= f0_ + opts_.c1 * p.step * d0_) return true;
    return flat(p) && p.slope <= (2.0 * opts_.c1 - 1.0) * d0_;
  }

  static constexpr double kFlatTol = 1e-10;

  bool zoom(Point lo, Point hi, Point& out) {
    while (evals_ < opts_.max_line_search) {
      const double width = std::abs(hi.step - lo.step);
      if (width <= 1e-16 * std::max(1.0, std::abs(lo.step))) break;
      double trial = std::numeric_limits<double>::quiet_NaN();
      if (std::isfinite(hi.value)) trial = cubic_min(lo.step, lo.value, lo.slope, hi.step, hi.value, hi.slope);
      const double a = std::min(lo.step, hi.step);
      const double b = std::max(lo.step, hi.step);
      if (!std::isfinite(trial) || trial < a + 0.1 * (b - a) || trial > b - 0.1 * (b - a)) trial = 0.5 * (lo.step + hi.step);
      Point cur = eval(trial);
      if (!std::isfinite(cur.value) || !sufficient(cur) || (cur.value >= lo.value && !flat(cur))) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -opts_.c2 * d0_) {
          out = std::move(cur);
          return true;
        }
        if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    out = best_;
    return false;
  }

  const CostGradFn& fn_;
  const Eigen::VectorXd& w_;
  const Eigen::VectorXd& dir_;
  double f0_;
  double d0_;
  const LbfgsOptions& opts_;
  std::size_t evals_ = 0;
  Point best_;
};

// After a failed search, the lowest point seen is kept only if its decrease
// is real or it also lowers the gradient; a lower cost inside rounding noise
// is not progress.
bool worth_keeping(const Point& p, double f, const Eigen::VectorXd& g) {
  if (!(p.step > 0.0 && p.value < f)) return false;
  if (f - p.value > 1e-10 * std::abs(f)) return true;
  return p.grad.cwiseAbs().maxCoeff() < g.cwiseAbs().maxCoeff();
}

}  // namespace

LbfgsResult minimize_lbfgs(const CostGradFn& fn, Eigen::VectorXd w0, const LbfgsOptions& opts) {
  opts.validate();
  LbfgsResult res;
  CostGrad cg = fn(w0);
  res.evaluations = 1;
  require(std::isfinite(cg.value) && cg.grad.allFinite(), ErrorCode::NonFinite, "L-BFGS: cost not finite at w0");
  require(cg.grad.size() == w0.size(), ErrorCode::ShapeMismatch, "L-BFGS: gradient size mismatch");

  Eigen::VectorXd w = std::move(w0);
  double f = cg.value;
  Eigen::VectorXd g = std::move(cg.grad);
  res.cost_history.push_back(f);
  res.grad_norm_history.push_back(g.size() ? g.cwiseAbs().maxCoeff() : 0.0);

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;

  res.termination = Termination::IterationCap;
  while (true) {
    if (res.grad_norm_history.back() <= opts.grad_tol) {
      res.termination = Termination::GradientTolerance;
      break;
    }
    if (res.iterations >= opts.max_iterations) {
      res.termination = Termination::IterationCap;
      break;
    }

    // Two-loop recursion for the search direction.
    Eigen::VectorXd q = g;
    const std::size_t k = s_hist.size();
    std::vector<double> alpha(k);
    for (std::size_t i = k; i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    double step = opts.initial_step;
    if (k > 0) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      // Without curvature information, start from a unit-length step.
      step = std::min(opts.initial_step, 1.0 / g.norm());
    }
    for (std::size_t i = 0; i < k; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;
    double d0 = g.dot(dir);
    if (!(d0 < 0.0)) {
      // Not a descent direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      d0 = -g.squaredNorm();
      step = std::min(opts.initial_step, 1.0 / g.norm());
    }

    LineSearch ls(fn, w, dir, f, d0, opts);
    Point next;
    const bool ok = ls.run(step, next);
    res.evaluations += ls.evaluations();
    if (!ok && !s_hist.empty()) {
      // Stale curvature pairs can produce a poor direction once gradients
      // approach rounding level. Drop them and retry from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      if (worth_keeping(next, f, g)) {
        w = std::move(next.w);
        f = next.value;
        g = std::move(next.grad);
        ++res.iterations;
        res.cost_history.push_back(f);
        res.grad_norm_history.push_back(g.cwiseAbs().maxCoeff());
      }
      continue;
    }
    if (!ok) {
      if (worth_keeping(next, f, g)) {
        w = std::move(next.w);
        f = next.value;
        g = std::move(next.grad);
        ++res.iterations;
        res.cost_history.push_back(f);
        res.grad_norm_history.push_back(g.cwiseAbs().maxCoeff());
        if (res.grad_norm_history.back() <= opts.grad_tol) {
          res.termination = Termination::GradientTolerance;
          break;
        }
      }
      res.termination = Termination::LineSearchFailure;
      break;
    }

    Eigen::VectorXd s = next.w - w;
    Eigen::VectorXd y = next.grad - g;
    w = std::move(next.w);
    f = next.value;
    g = std::move(next.grad);
    ++res.iterations;
    res.cost_history.push_back(f);
    res.grad_norm_history.push_back(g.cwiseAbs().maxCoeff());

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (s_hist.size() == opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
  }

  res.w = std::move(w);
  res.value = f;
  res.converged = res.termination == Termination::GradientTolerance;
  return res;
}

}  // namespace vda
