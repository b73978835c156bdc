#include <doctest.h>

#include "oracles.hpp"
#include "vda/error.hpp"
#include "vda/observation.hpp"
#include "vda/reduced_space.hpp"

using namespace vda;

namespace {

double frob(const Eigen::MatrixXd& m) { return m.norm(); }

Eigen::MatrixXd dense(const SvdFactors& f) { return f.U * f.sigma.asDiagonal() * f.Wt; }

void check_invariants(const Eigen::MatrixXd& v, const SvdFactors& f) {
  const auto s = v.cols();
  CHECK(frob(dense(f) - v) <= 1e-10 * std::max(frob(v), 1e-300));
  CHECK((f.U.transpose() * f.U - Eigen::MatrixXd::Identity(s, s)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((f.Wt * f.Wt.transpose() - Eigen::MatrixXd::Identity(s, s)).cwiseAbs().maxCoeff() <= 1e-10);
  for (Eigen::Index i = 0; i < s; ++i) {
    CHECK(f.sigma[i] >= 0.0);
    if (i > 0) CHECK(f.sigma[i] <= f.sigma[i - 1]);
  }
}

}  // namespace

TEST_CASE("build_background_matrix") {
  const Grid3 g{2, 1, 1};
  SUBCASE("two states") {
    const FieldSeries s(g, (Eigen::MatrixXd(2, 2) << 1, 3, 2, 4).finished());
    const BackgroundMatrix bg = build_background_matrix(s);
    CHECK(bg.mean == Eigen::Vector2d(2, 3));
    CHECK(bg.V == (Eigen::MatrixXd(2, 2) << -1, 1, -1, 1).finished());
  }
  SUBCASE("identical states") {
    const FieldSeries s(g, Eigen::MatrixXd::Constant(2, 5, 0.7));
    CHECK(build_background_matrix(s).V.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("fewer than two samples") {
    CHECK_THROWS_AS(build_background_matrix(FieldSeries(g, Eigen::MatrixXd::Zero(2, 1))), Error);
  }
  SUBCASE("V V^T is positive semidefinite") {
    const FieldSeries s(Grid3{8, 1, 1}, oracle::gaussian(8, 16, 3));
    const BackgroundMatrix bg = build_background_matrix(s);
    const auto eig = oracle::jacobi_eigenvalues(bg.V * bg.V.transpose());
    for (double e : eig) CHECK(e >= -1e-10);
    CHECK(bg.V.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * 16 * s.data().cwiseAbs().maxCoeff());
  }
}

TEST_CASE("compute_svd") {
  SUBCASE("already diagonal") {
    const Eigen::MatrixXd v = (Eigen::MatrixXd(3, 2) << 3, 0, 0, 2, 0, 0).finished();
    const SvdFactors f = compute_svd(v);
    CHECK(f.sigma[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(f.sigma[1] == doctest::Approx(2.0).epsilon(1e-14));
    check_invariants(v, f);
  }
  SUBCASE("zero matrix") {
    const Eigen::MatrixXd v = Eigen::MatrixXd::Zero(5, 3);
    const SvdFactors f = compute_svd(v);
    CHECK(f.sigma.cwiseAbs().maxCoeff() == 0.0);
    check_invariants(v, f);
  }
  SUBCASE("singular values from the characteristic polynomial of the 3x3 Gram") {
    for (unsigned seed = 0; seed < 10; ++seed) {
      const Eigen::MatrixXd v = oracle::gaussian(6, 3, 100 + seed);
      const SvdFactors f = compute_svd(v);
      const auto eig = oracle::symmetric3_eigenvalues(Eigen::Matrix3d(v.transpose() * v));
      for (int i = 0; i < 3; ++i) CHECK(std::abs(f.sigma[i] - std::sqrt(std::max(eig[i], 0.0))) <= 1e-9);
      check_invariants(v, f);
    }
  }
  SUBCASE("sign convention: largest entry of each right singular vector is positive") {
    const SvdFactors f = compute_svd(oracle::gaussian(10, 4, 5));
    for (Eigen::Index j = 0; j < 4; ++j) {
      Eigen::Index arg = 0;
      f.Wt.row(j).cwiseAbs().maxCoeff(&arg);
      CHECK(f.Wt(j, arg) > 0.0);
    }
    const SvdFactors g = compute_svd(-oracle::gaussian(10, 4, 5));
    CHECK((g.Wt - f.Wt).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((g.U + f.U).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("rank deficiency and repeated singular values") {
    Eigen::MatrixXd v = oracle::gaussian(12, 5, 6);
    v.col(3) = v.col(0) - 2.0 * v.col(1);
    v.col(4) = v.col(2);
    const SvdFactors f = compute_svd(v);
    CHECK(f.sigma[4] == 0.0);
    check_invariants(v, f);
    const Eigen::MatrixXd iso = Eigen::MatrixXd::Identity(6, 3) * 2.0;
    check_invariants(iso, compute_svd(iso));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(compute_svd(Eigen::MatrixXd::Zero(2, 3)), Error);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 2);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(compute_svd(bad), Error);
  }
}

TEST_CASE("truncate and reconstruct") {
  SUBCASE("tau = S reproduces V") {
    const Eigen::MatrixXd v = oracle::gaussian(9, 4, 7);
    const TruncatedBasis b = truncate(compute_svd(v), 4);
    CHECK((b.reconstruct() - v).norm() <= 1e-10 * v.norm());
  }
  SUBCASE("rank one, tau = 1") {
    const Eigen::MatrixXd v = oracle::gaussian(7, 1, 8) * oracle::gaussian(1, 3, 9);
    const TruncatedBasis b = truncate(compute_svd(v), 1);
    CHECK((b.reconstruct() - v).norm() <= 1e-12 * v.norm());
  }
  SUBCASE("energy identity and Eckart-Young monotonicity") {
    const Eigen::MatrixXd v = oracle::gaussian(8, 4, 10);
    const SvdFactors f = compute_svd(v);
    const double gap = (v - truncate(f, 2).reconstruct()).squaredNorm();
    const double tail = f.sigma[2] * f.sigma[2] + f.sigma[3] * f.sigma[3];
    CHECK(std::abs(gap - tail) <= 1e-10 * tail);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t tau = 1; tau <= 4; ++tau) {
      const double err = (v - truncate(f, tau).reconstruct()).norm();
      CHECK(err <= prev + 1e-12);
      prev = err;
    }
  }
  SUBCASE("tau out of range") {
    const SvdFactors f = compute_svd(oracle::gaussian(6, 3, 11));
    CHECK_THROWS_AS(truncate(f, 0), Error);
    CHECK_THROWS_AS(truncate(f, 4), Error);
  }
}

TEST_CASE("apply_basis and apply_pinv") {
  const Eigen::MatrixXd v = oracle::gaussian(10, 4, 12);
  const TruncatedBasis full = truncate(compute_svd(v), 4);
  CHECK(full.apply_basis(Eigen::VectorXd::Zero(4)).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd w = oracle::gaussian(4, 1, 13);
  CHECK((full.apply_pinv(full.apply_basis(w)) - w).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((full.apply_basis(w) - oracle::naive_multiply(v, w)).cwiseAbs().maxCoeff() <= 1e-10);

  SUBCASE("truncated: pinv(basis(w)) projects onto the top right singular vectors") {
    const TruncatedBasis b = truncate(compute_svd(v), 2);
    const Eigen::MatrixXd wtop = b.factors().Wt.topRows(2).transpose();
    const Eigen::VectorXd expect = oracle::gram_schmidt_projection(wtop, w);
    CHECK((b.apply_pinv(b.apply_basis(w)) - expect).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("zero singular value: null direction is annihilated") {
    // V = [[1, 1], [1, 1]]: sigma = (2, 0), null direction (1, -1)/sqrt(2).
    const Eigen::MatrixXd r = (Eigen::MatrixXd(2, 2) << 1, 1, 1, 1).finished();
    const TruncatedBasis b = truncate(compute_svd(r), 2);
    CHECK(b.factors().sigma[1] == 0.0);
    const Eigen::VectorXd null_dir = Eigen::Vector2d(1, -1);
    CHECK(b.apply_basis(null_dir).cwiseAbs().maxCoeff() <= 1e-15);
    const Eigen::VectorXd back = b.apply_pinv(b.apply_basis(Eigen::Vector2d(3, 1)));
    CHECK((back - Eigen::Vector2d(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(b.apply_pinv(Eigen::Vector2d(1, -1)).cwiseAbs().maxCoeff() <= 1e-15);
  }
  CHECK_THROWS_AS(full.apply_basis(Eigen::VectorXd::Zero(3)), Error);
  CHECK_THROWS_AS(full.apply_pinv(Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("tau selector") {
  CHECK(select_tau_sqrt_sigma1((Eigen::VectorXd(4) << 100, 20, 10, 5).finished()) == 3);
  CHECK(select_tau_sqrt_sigma1((Eigen::VectorXd(3) << 0.5, 0.1, 0.0).finished()) == 1);
}

TEST_CASE("precompute_HV") {
  const Eigen::MatrixXd v = oracle::gaussian(30, 5, 14);
  const TruncatedBasis b = truncate(compute_svd(v), 3);
  const Eigen::MatrixXd vt = b.reconstruct();
  CHECK(precompute_HV(ObservationOperator::identity(30), b) == vt);
  const Eigen::MatrixXd one = precompute_HV(ObservationOperator::subsample(30, {17}), b);
  CHECK(one.rows() == 1);
  CHECK(one.row(0) == vt.row(17));

  const ObservationOperator op = draw_observation_operator(30, 11, 5);
  const Eigen::MatrixXd hv = precompute_HV(op, b);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(11, 30);
  for (std::size_t r = 0; r < 11; ++r) h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(op.indices()[r])) = 1.0;
  const Eigen::MatrixXd vtau = b.factors().U.leftCols(3) * b.factors().sigma.head(3).asDiagonal() * b.factors().Wt.topRows(3);
  CHECK((hv - oracle::naive_multiply(h, vtau)).cwiseAbs().maxCoeff() <= 1e-12);
  for (std::size_t r = 0; r < 11; ++r) CHECK(hv.row(r) == vt.row(op.indices()[r]));  // bit-level
  CHECK_THROWS_AS(precompute_HV(ObservationOperator::identity(29), b), Error);
  CHECK_THROWS_AS(ObservationOperator::subsample(30, {30}), Error);
}
