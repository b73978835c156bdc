#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>

#include "oracles.hpp"
#include "vda/assimilate.hpp"
#include "vda/error.hpp"
#include "vda/rng.hpp"

using namespace vda;

namespace {

double max_abs(const Eigen::MatrixXd& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

QuadraticCost random_cost(Eigen::Index rows, Eigen::Index cols, unsigned seed, double sigma) {
  QuadraticCost c;
  c.op = oracle::gaussian(rows, cols, seed);
  c.misfit = oracle::gaussian(rows, 1, seed + 1000);
  c.sigma = sigma;
  return c;
}

double fd_error(const QuadraticCost& c, const Eigen::VectorXd& w) {
  const Eigen::VectorXd g = cost_grad(c, w).grad;
  const Eigen::VectorXd fd =
      oracle::central_difference([&](const Eigen::VectorXd& v) { return cost_grad(c, v).value; }, w, 1e-6);
  return oracle::max_relative_error(g, fd, 1e-4 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
}

}  // namespace

TEST_CASE("observations") {
  const Eigen::VectorXd x = oracle::gaussian(100, 1, 1);
  SUBCASE("M = n without noise") {
    const ObservationSet o = build_observations(x, 100, 0.005, 3);
    CHECK(o.op.is_identity());
    CHECK(o.values == x);
  }
  SUBCASE("M = 1") {
    const ObservationSet o = build_observations(x, 1, 0.005, 3);
    CHECK(o.values.size() == 1);
    CHECK(o.values[0] == x[static_cast<Eigen::Index>(o.op.indices()[0])]);
  }
  SUBCASE("noise statistics") {
    const Eigen::VectorXd big = oracle::gaussian(200000, 1, 2);
    const ObservationSet o = build_observations(big, 100000, 0.005, 4, true);
    oracle::Welford w;
    for (std::size_t r = 0; r < o.op.obs_count(); ++r)
      w.push(o.values[static_cast<Eigen::Index>(r)] - big[static_cast<Eigen::Index>(o.op.indices()[r])]);
    CHECK(std::abs(std::sqrt(w.variance()) - 0.005) <= 0.1 * 0.005);
    const auto& idx = o.op.indices();
    CHECK(std::adjacent_find(idx.begin(), idx.end(), std::greater_equal<>()) == idx.end());
  }
  CHECK_THROWS_AS(build_observations(x, 0, 0.005, 3), Error);
  CHECK_THROWS_AS(build_observations(x, 101, 0.005, 3), Error);
}

TEST_CASE("misfit") {
  const Eigen::VectorXd xb = oracle::gaussian(50, 1, 1);
  const ObservationOperator op = draw_observation_operator(50, 20, 2);
  ObservationSet o{op, op.apply(xb), 0.005, std::nullopt};
  CHECK(max_abs(misfit(o, xb)) == 0.0);
  o.values = oracle::gaussian(20, 1, 3);
  CHECK(misfit(o, Eigen::VectorXd::Zero(50)) == o.values);
  const Eigen::VectorXd d = misfit(o, xb);
  for (std::size_t r = 0; r < 20; ++r)
    CHECK(d[static_cast<Eigen::Index>(r)] == o.values[static_cast<Eigen::Index>(r)] - xb[static_cast<Eigen::Index>(op.indices()[r])]);
  const Eigen::VectorXd back = op.adjoint(d);
  CHECK(back.size() == 50);
  CHECK(back.sum() == doctest::Approx(d.sum()));
}

TEST_CASE("cost and gradient") {
  SUBCASE("zero weights") {
    QuadraticCost c;
    c.op = oracle::gaussian(2, 3, 1);
    c.misfit = Eigen::Vector2d(1.0, -1.0);  // ||d||^2 = 2
    c.sigma = 1.0;
    CHECK(cost_grad(c, Eigen::VectorXd::Zero(3)).value == doctest::Approx(1.0));
    c.misfit.setZero();
    const CostGrad z = cost_grad(c, Eigen::VectorXd::Zero(3));
    CHECK(z.value == 0.0);
    CHECK(max_abs(z.grad) == 0.0);
  }
  SUBCASE("mono and bi share one implementation") {
    const QuadraticCost c = random_cost(9, 4, 2, 0.3);
    const Eigen::VectorXd w = oracle::gaussian(4, 1, 3);
    const CostGrad a = cost_grad_mono(MonoProblem{c}, w);
    const CostGrad b = cost_grad_bi(BiProblem{c}, w);
    CHECK(a.value == b.value);
    CHECK(a.grad == b.grad);
    CHECK(cost_grad_bi(BiProblem{c}, Eigen::VectorXd::Zero(4)).value ==
          doctest::Approx(0.5 * c.misfit.squaredNorm() / (0.3 * 0.3)));
  }
  SUBCASE("gradient matches finite differences") {
    for (unsigned s = 0; s < 10; ++s) {
      const QuadraticCost c = random_cost(12, 5, 10 + s, 0.7);
      CHECK(fd_error(c, oracle::gaussian(5, 1, 50 + s)) <= 1e-6);
    }
  }
  SUBCASE("diagonal R via weights") {
    QuadraticCost c = random_cost(6, 3, 4, 1.0);
    c.inv_variance = Eigen::VectorXd::LinSpaced(6, 1.0, 6.0);
    CHECK(fd_error(c, oracle::gaussian(3, 1, 5)) <= 1e-6);
    const Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
    CHECK(cost_grad(c, w).value == doctest::Approx(0.5 * c.misfit.cwiseAbs2().dot(*c.inv_variance)));
  }
}

TEST_CASE("closed form") {
  SUBCASE("zero misfit") {
    QuadraticCost c = random_cost(5, 3, 1, 0.1);
    c.misfit.setZero();
    CHECK(max_abs(solve_closed_form(normal_equations(c)).w) == 0.0);
  }
  SUBCASE("scalar case") {
    QuadraticCost c;
    c.op = Eigen::MatrixXd::Constant(1, 1, 2.0);  // H V = 1 * 2
    c.misfit = Eigen::VectorXd::Constant(1, 4.0);
    c.sigma = 1.0;
    const NormalEquations eq = normal_equations(c);
    CHECK(eq.A(0, 0) == doctest::Approx(4.0));
    CHECK(eq.b[0] == doctest::Approx(8.0));
    CHECK(solve_closed_form(eq).w[0] == doctest::Approx(1.6));
  }
  SUBCASE("stationarity and residual") {
    for (unsigned s = 0; s < 10; ++s) {
      const QuadraticCost c = random_cost(30, 6, 20 + s, 0.05);
      const NormalEquations eq = normal_equations(c);
      const ClosedFormResult r = solve_closed_form(eq);
      CHECK(r.residual <= 1e-10 * eq.b.norm());
      CHECK(max_abs(cost_grad(c, r.w).grad) <= 1e-9 * (1.0 + eq.b.norm()));
    }
  }
}

TEST_CASE("L-BFGS") {
  SUBCASE("zero misfit converges in zero iterations") {
    QuadraticCost c = random_cost(8, 4, 1, 0.1);
    c.misfit.setZero();
    const LbfgsResult r = minimize_lbfgs([&](const Eigen::VectorXd& w) { return cost_grad(c, w); }, Eigen::VectorXd::Zero(4));
    CHECK(r.iterations == 0);
    CHECK(r.converged);
    CHECK(max_abs(r.w) == 0.0);
  }
  SUBCASE("1-D quadratic") {
    const LbfgsResult r = minimize_lbfgs(
        [](const Eigen::VectorXd& w) {
          return CostGrad{0.5 * w[0] * w[0] - w[0], Eigen::VectorXd::Constant(1, w[0] - 1.0)};
        },
        Eigen::VectorXd::Zero(1));
    CHECK(r.converged);
    CHECK(std::abs(r.w[0] - 1.0) <= 1e-8);
  }
  SUBCASE("agrees with the closed form; cost never increases") {
    for (unsigned s = 0; s < 20; ++s) {
      const QuadraticCost c = random_cost(40, 8, 100 + s, 0.05);
      const Eigen::VectorXd exact = solve_closed_form(normal_equations(c)).w;
      const LbfgsResult r = minimize_lbfgs([&](const Eigen::VectorXd& w) { return cost_grad(c, w); }, Eigen::VectorXd::Zero(8));
      CHECK(r.converged);
      CHECK(r.iterations <= 200);
      CHECK(max_abs(r.w - exact) <= 1e-6 * (1.0 + max_abs(exact)));
      // Non-increasing up to rounding of the cost itself.
      for (std::size_t k = 1; k < r.cost_history.size(); ++k)
        CHECK(r.cost_history[k] <= r.cost_history[k - 1] * (1.0 + 1e-10));
      CHECK(r.cost_history.size() == r.iterations + 1);
    }
  }
  SUBCASE("Rosenbrock") {
    auto rosen = [](const Eigen::VectorXd& w) {
      const double a = 1.0 - w[0], b = w[1] - w[0] * w[0];
      return CostGrad{a * a + 100.0 * b * b, Eigen::Vector2d(-2.0 * a - 400.0 * w[0] * b, 200.0 * b)};
    };
    LbfgsOptions o;
    o.grad_tol = 1e-6;
    const LbfgsResult r = minimize_lbfgs(rosen, Eigen::Vector2d(-1.2, 1.0), o);
    CHECK(r.converged);
    CHECK(max_abs(r.w - Eigen::Vector2d(1.0, 1.0)) <= 1e-5);
  }
  SUBCASE("iteration cap is flagged") {
    const QuadraticCost c = random_cost(40, 8, 7, 0.01);
    LbfgsOptions o;
    o.max_iterations = 2;
    const LbfgsResult r = minimize_lbfgs([&](const Eigen::VectorXd& w) { return cost_grad(c, w); }, Eigen::VectorXd::Zero(8), o);
    CHECK_FALSE(r.converged);
    CHECK(r.termination == Termination::IterationCap);
  }
  SUBCASE("line-search failure on an unbounded direction is flagged") {
    // Linear cost: no step can satisfy the curvature condition.
    const LbfgsResult r = minimize_lbfgs(
        [](const Eigen::VectorXd& w) { return CostGrad{-w[0], Eigen::VectorXd::Constant(1, -1.0)}; },
        Eigen::VectorXd::Zero(1));
    CHECK_FALSE(r.converged);
    CHECK(r.termination == Termination::LineSearchFailure);
  }
}

namespace {

struct Instance {
  BackgroundMatrix bg;
  SvdFactors f;
  Eigen::VectorXd truth;
};

Instance make_instance(Eigen::Index n, Eigen::Index s, unsigned seed) {
  Instance in;
  in.bg.V = oracle::gaussian(n, s, seed);
  in.bg.mean = oracle::gaussian(n, 1, seed + 1);
  in.f = compute_svd(in.bg.V);
  in.truth = in.bg.mean + in.bg.V * oracle::gaussian(s, 1, seed + 2) * 0.1 + 0.1 * oracle::gaussian(n, 1, seed + 3);
  return in;
}

}  // namespace

TEST_CASE("latent operators and restoration") {
  const Instance in = make_instance(30, 5, 1);
  const LinearCodec lin = make_linear_codec(in.f, 5);
  const Eigen::MatrixXd vl = latent_background(lin, in.bg);
  CHECK(max_abs(vl - oracle::naive_multiply(lin.basis().transpose(), in.bg.V)) <= 1e-12);
  BackgroundMatrix zero = in.bg;
  zero.V.setZero();
  CHECK(max_abs(latent_background(lin, zero)) == 0.0);

  ObservationSet obs{ObservationOperator::identity(30), in.truth, 0.005, std::nullopt};
  CHECK(max_abs(latent_misfit(lin, obs) - oracle::naive_multiply(lin.basis().transpose(), in.truth)) <= 1e-12);
  obs.values.setZero();
  CHECK(max_abs(latent_misfit(lin, obs)) == 0.0);
  ObservationSet partial{ObservationOperator::subsample(30, {1, 2}), Eigen::VectorXd::Zero(2), 0.005, std::nullopt};
  try {
    latent_misfit(lin, partial);
    FAIL("expected an unsupported-configuration error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Unsupported);
  }

  NeuralCodec nc({30, 12, 4});
  nc.initialize(3);
  const Eigen::MatrixXd nvl = latent_background(nc, in.bg);
  for (Eigen::Index j = 0; j < 5; ++j) CHECK(max_abs(nvl.col(j) - nc.encode(in.bg.V.col(j))) <= 1e-12);
  obs.values = in.truth;
  CHECK(max_abs(latent_misfit(nc, obs) - nc.encode(in.truth)) <= 1e-12);

  const TruncatedBasis basis = truncate(in.f, 5);
  CHECK(max_abs(restore_mono(basis, Eigen::VectorXd::Zero(5))) == 0.0);
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(5, 0);
  CHECK(max_abs(restore_mono(basis, e1) - oracle::naive_multiply(in.bg.V, e1)) <= 1e-10);
  const Eigen::VectorXd w = oracle::gaussian(5, 1, 9);
  CHECK(max_abs(restore_mono(basis, 2.0 * w) - 2.0 * restore_mono(basis, w)) <= 1e-12);

  CHECK(max_abs(restore_bi(lin, vl, Eigen::VectorXd::Zero(5))) == 0.0);
  CHECK(max_abs(restore_bi(lin, vl, w) - oracle::naive_multiply(lin.basis(), oracle::naive_multiply(vl, w))) <= 1e-10);
  const Eigen::VectorXd z = oracle::naive_multiply(nvl, w);
  CHECK(max_abs(restore_bi(nc, nvl, w) - nc.decode(z)) <= 1e-12);
}

TEST_CASE("pipelines") {
  const Instance in = make_instance(60, 8, 5);
  const MonoAssimilator mono(truncate(in.f, 8), in.bg.mean);
  auto lin = std::make_shared<LinearCodec>(make_linear_codec(in.f, 8));
  const BiAssimilator bi(lin, in.bg, 0.005);

  SUBCASE("observation equal to the background mean is a fixed point") {
    const ObservationSet obs{ObservationOperator::identity(60), in.bg.mean, 0.005, std::nullopt};
    const Solution a = mono.assimilate(obs);
    const Solution b = bi.assimilate(obs);
    CHECK(a.x_da == in.bg.mean);
    CHECK(b.x_da == in.bg.mean);
    CHECK(a.iterations == 0);
  }
  SUBCASE("equivalence with a linear codec, m = S") {
    const ObservationSet obs{ObservationOperator::identity(60), in.truth, 0.005, std::nullopt};
    for (Solver solver : {Solver::Lbfgs, Solver::ClosedForm}) {
      const Solution a = mono.assimilate(obs, {solver, {}});
      const Solution b = bi.assimilate(obs, {solver, {}});
      CHECK(a.converged);
      CHECK(b.converged);
      CHECK(max_abs(a.w - b.w) <= 1e-8);
      CHECK((a.x_da - b.x_da).norm() <= 1e-6 * a.x_da.norm());
      CHECK(a.final_cost <= a.cost_history.front());
      CHECK(a.minimize_s + a.restore_s <= a.total_s + 1e-6);
    }
  }
  SUBCASE("latent normal equations: A_l = A and b_l = b") {
    const ObservationSet obs{ObservationOperator::identity(60), in.truth, 0.005, std::nullopt};
    const NormalEquations m = normal_equations(mono.prepare(obs).cost);
    const NormalEquations l = normal_equations(bi.prepare(obs).cost);
    CHECK((m.A - l.A).norm() <= 1e-9 * m.A.norm());
    CHECK((m.b - l.b).norm() <= 1e-9 * m.b.norm());
  }
  SUBCASE("normalization is undone on the way out") {
    NormStats st{NormMode::Scalar, Eigen::VectorXd::Constant(60, 3.0), Eigen::VectorXd::Constant(60, 2.0)};
    const MonoAssimilator scaled(truncate(in.f, 4), in.bg.mean, st);
    const ObservationSet obs{ObservationOperator::identity(60), in.truth, 0.005, std::nullopt};
    const Solution a = scaled.assimilate(obs);
    const Solution b = MonoAssimilator(truncate(in.f, 4), in.bg.mean).assimilate(obs);
    CHECK(max_abs(a.x_da - (b.x_da * 2.0 + Eigen::VectorXd::Constant(60, 3.0))) <= 1e-12);
  }
  SUBCASE("mono with a row-subsample operator") {
    const ObservationSet obs = build_observations(in.truth, 25, 0.005, 7);
    const Solution a = mono.assimilate(obs);
    CHECK(a.converged);
    CHECK(a.x_da.size() == 60);
    CHECK_THROWS_AS(bi.assimilate(obs), Error);
  }
}
