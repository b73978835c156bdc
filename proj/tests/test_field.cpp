#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "vda/error.hpp"
#include "vda/field.hpp"

using namespace vda;

namespace {

FieldSeries series_from(std::initializer_list<std::initializer_list<double>> steps, Grid3 grid) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(steps.size()));
  Eigen::Index t = 0;
  for (const auto& s : steps) {
    Eigen::Index i = 0;
    for (double v : s) d(i++, t) = v;
    ++t;
  }
  return FieldSeries(grid, d);
}

FieldSeries random_series(Grid3 grid, Eigen::Index steps, unsigned seed) {
  return FieldSeries(grid, oracle::gaussian(static_cast<Eigen::Index>(grid.size()), steps, seed));
}

}  // namespace

TEST_CASE("flatten and unflatten are inverse on small grids") {
  for (Grid3 g : {Grid3{1, 1, 1}, Grid3{3, 1, 2}, Grid3{2, 5, 3}, Grid3{7, 4, 1}, Grid3{32, 32, 32}}) {
    std::size_t expected = 0;
    for (std::size_t k = 0; k < g.nz; ++k)
      for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
          const std::size_t idx = g.flatten(i, j, k);
          REQUIRE(idx == expected++);  // x fastest, then y, then z
          const auto back = g.unflatten(idx);
          REQUIRE(back[0] == i);
          REQUIRE(back[1] == j);
          REQUIRE(back[2] == k);
        }
  }
}

TEST_CASE("grid validation rejects zero extents") {
  CHECK_THROWS_AS(Grid3({0, 2, 2}).validate(), Error);
  CHECK_NOTHROW(Grid3({1, 2, 2}).validate());
}

TEST_CASE("field series invariants") {
  const Grid3 g{2, 1, 1};
  CHECK_THROWS_AS(FieldSeries(g, Eigen::MatrixXd::Zero(3, 2)), Error);
  CHECK_THROWS_AS(FieldSeries(g, Eigen::MatrixXd::Zero(2, 2), {1, 1}), Error);
  const FieldSeries s(g, Eigen::MatrixXd::Zero(2, 3), {4, 7, 9});
  CHECK(s.slice(1, 3).labels() == std::vector<std::int64_t>{7, 9});
}

TEST_CASE("generate_synthetic") {
  SynthConfig cfg{Grid3{6, 5, 4}, 30, 6, 0.9, 0.5, 1.0};

  SUBCASE("zero amplitude gives an all-zero series") {
    cfg.amplitude = 0.0;
    const FieldSeries s = generate_synthetic(cfg, 3);
    CHECK(s.steps() == 30);
    CHECK(s.data().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("identical config and seed are bit-identical") {
    const FieldSeries a = generate_synthetic(cfg, 11);
    const FieldSeries b = generate_synthetic(cfg, 11);
    CHECK(a.data() == b.data());
    const FieldSeries c = generate_synthetic(cfg, 12);
    CHECK(a.data() != c.data());
  }
  SUBCASE("errors") {
    cfg.modes = cfg.grid.size() + 1;
    CHECK_THROWS_AS(generate_synthetic(cfg, 0), Error);
    cfg.modes = 4;
    cfg.grid.nx = 0;
    CHECK_THROWS_AS(generate_synthetic(cfg, 0), Error);
  }
}

TEST_CASE("synthetic latent coefficients follow AR(1) with rho near 0.95") {
  // K = 4 on 16x16x8: the modes are the constant and the first cosine along
  // x, y and z. The oracle rebuilds those cosines, inverts the elementwise
  // x + 0.5 tanh(x) map by Newton's method and projects.
  const Grid3 g{16, 16, 8};
  const SynthConfig cfg{g, 1000, 4, 0.95, 0.5, 1.0};
  const FieldSeries s = generate_synthetic(cfg, 2024);
  const auto n = static_cast<Eigen::Index>(g.size());

  Eigen::MatrixXd modes(n, 4);
  const double pi = std::numbers::pi;
  for (std::size_t k = 0; k < g.nz; ++k)
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) {
        const auto idx = static_cast<Eigen::Index>(i + g.nx * (j + g.ny * k));
        modes(idx, 0) = 1.0;
        modes(idx, 1) = std::cos(pi * (i + 0.5) / g.nx);
        modes(idx, 2) = std::cos(pi * (j + 0.5) / g.ny);
        modes(idx, 3) = std::cos(pi * (k + 0.5) / g.nz);
      }

  Eigen::MatrixXd coeffs(4, 1000);
  for (Eigen::Index t = 0; t < 1000; ++t) {
    Eigen::VectorXd lin = s.data().col(t);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = s.data()(i, t);
      double x = y;
      for (int it = 0; it < 60; ++it) {
        const double th = std::tanh(x);
        x -= (x + 0.5 * th - y) / (1.0 + 0.5 * (1.0 - th * th));
      }
      lin[i] = x;
    }
    for (Eigen::Index m = 0; m < 4; ++m) coeffs(m, t) = modes.col(m).dot(lin) / modes.col(m).squaredNorm();
  }
  for (Eigen::Index m = 0; m < 4; ++m) {
    const Eigen::VectorXd c = coeffs.row(m).transpose();
    const double mean = c.mean();
    const Eigen::VectorXd z = c.array() - mean;
    const double lag1 = z.head(999).dot(z.tail(999)) / z.squaredNorm();
    CHECK(lag1 >= 0.90);
    CHECK(lag1 <= 0.99);
  }
}

TEST_CASE("split_series") {
  const Grid3 g{1, 1, 1};
  auto make = [&](Eigen::Index t) { return FieldSeries(g, Eigen::MatrixXd::Zero(1, t)); };
  {
    auto [train, test] = split_series(make(10), 0.8);
    CHECK(train.steps() == 8);
    CHECK(test.steps() == 2);
    CHECK(test.labels().front() == 8);
  }
  {
    auto [train, test] = split_series(make(988), 0.8);
    CHECK(train.steps() == 791);
    CHECK(test.steps() == 197);
  }
  {
    auto [train, test] = split_series(make(3), 0.5);
    CHECK(train.steps() == 2);
    CHECK(test.steps() == 1);
  }
  CHECK_THROWS_AS(split_series(make(0), 0.5), Error);
  CHECK_THROWS_AS(split_series(make(5), 0.0), Error);
  CHECK_THROWS_AS(split_series(make(5), 1.0), Error);
}

TEST_CASE("compute_norm_stats") {
  const Grid3 g{3, 1, 1};
  SUBCASE("constant series") {
    const FieldSeries s = series_from({{2.5, 2.5, 2.5}, {2.5, 2.5, 2.5}}, g);
    const NormStats st = compute_norm_stats(s, NormMode::PerLocation);
    CHECK(st.mean.isApproxToConstant(2.5));
    CHECK(st.std.isApproxToConstant(kStdFloor));
  }
  SUBCASE("two-point scalar statistics") {
    const FieldSeries s = series_from({{0, 0, 0}, {2, 2, 2}}, g);
    const NormStats st = compute_norm_stats(s, NormMode::Scalar);
    CHECK(st.mean.isApproxToConstant(1.0));
    CHECK(st.std.isApproxToConstant(1.0));
  }
  SUBCASE("single step in per-location mode") {
    const FieldSeries s = series_from({{1, 2, 3}}, g);
    CHECK_THROWS_AS(compute_norm_stats(s, NormMode::PerLocation), Error);
  }
  SUBCASE("agrees with a streaming second pass") {
    const FieldSeries s = generate_synthetic(SynthConfig{Grid3{5, 4, 3}, 50, 5, 0.9, 0.5, 2.0}, 9);
    const NormStats st = compute_norm_stats(s, NormMode::PerLocation);
    oracle::Welford all;
    for (Eigen::Index i = 0; i < s.data().rows(); ++i) {
      oracle::Welford w;
      for (Eigen::Index t = 0; t < s.data().cols(); ++t) {
        w.push(s.data()(i, t));
        all.push(s.data()(i, t));
      }
      CHECK(std::abs(w.mean - st.mean[i]) <= 1e-12);
      CHECK(std::abs(std::sqrt(w.variance()) - st.std[i]) <= 1e-12);
    }
    const NormStats sc = compute_norm_stats(s, NormMode::Scalar);
    CHECK(std::abs(all.mean - sc.mean[0]) <= 1e-12);
    CHECK(std::abs(std::sqrt(all.variance()) - sc.std[0]) <= 1e-12);
  }
}

TEST_CASE("normalization") {
  const FieldSeries s = random_series(Grid3{4, 3, 2}, 20, 5);
  for (NormMode mode : {NormMode::PerLocation, NormMode::Scalar}) {
    const NormStats st = compute_norm_stats(s, mode);
    CHECK(apply_normalization(Eigen::VectorXd(st.mean), st).cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index t = 0; t < 20; ++t) {
      const Eigen::VectorXd x = s.data().col(t);
      const Eigen::VectorXd back = invert_normalization(apply_normalization(x, st), st);
      CHECK((back - x).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + x.cwiseAbs().maxCoeff()));
    }
    if (mode == NormMode::Scalar) {
      const Eigen::VectorXd unit = apply_normalization(Eigen::VectorXd(st.mean + st.std), st);
      CHECK((unit.array() - 1.0).abs().maxCoeff() <= 1e-12);
    }
    CHECK_THROWS_AS(apply_normalization(Eigen::VectorXd::Zero(3), st), Error);
  }
}

TEST_CASE("mean_center") {
  const Grid3 g{2, 1, 1};
  const FieldSeries s = series_from({{1, 2}, {3, 4}}, g);
  const FieldSeries c = mean_center(s, column_mean(s.data()));
  CHECK(c.data() == (Eigen::MatrixXd(2, 2) << -1, 1, -1, 1).finished());
  CHECK(c.data().rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
  CHECK(mean_center(s, Eigen::VectorXd::Zero(2)).data() == s.data());
  CHECK_THROWS_AS(mean_center(s, Eigen::VectorXd::Zero(3)), Error);

  const FieldSeries r = random_series(Grid3{8, 4, 2}, 16, 77);
  const FieldSeries rc = mean_center(r, column_mean(r.data()));
  double direct = 0.0;
  for (Eigen::Index i = 0; i < rc.data().rows(); ++i) {
    long double sum = 0.0L;
    for (Eigen::Index t = 0; t < 16; ++t) sum += rc.data()(i, t);
    direct = std::max(direct, static_cast<double>(std::abs(sum)));
  }
  CHECK(direct <= 1e-12 * 16 * r.data().cwiseAbs().maxCoeff());
}

TEST_CASE("field_jitter") {
  const Grid3 g{50, 40, 30};
  const FieldSeries s = random_series(g, 4, 31);
  const NormStats st = compute_norm_stats(s, NormMode::PerLocation);
  const Eigen::VectorXd x = s.data().col(0);

  CHECK(field_jitter(x, JitterConfig{0.5, 0.0, 1}, st) == x);
  CHECK(field_jitter(x, JitterConfig{0.0, 0.7, 1}, st) == x);
  CHECK(field_jitter(x, JitterConfig{0.3, 0.4, 8}, st) == field_jitter(x, JitterConfig{0.3, 0.4, 8}, st));
  CHECK_THROWS_AS(field_jitter(x, JitterConfig{1.5, 0.4, 8}, st), Error);

  SUBCASE("full coverage, unit amplitude: perturbation std matches sigma") {
    const Eigen::VectorXd y = field_jitter(x, JitterConfig{1.0, 1.0, 4}, st);
    oracle::Welford w;
    for (Eigen::Index i = 0; i < x.size(); ++i) w.push((y[i] - x[i]) / st.std[i]);
    CHECK(std::abs(std::sqrt(w.variance()) - 1.0) <= 0.05);
  }
  SUBCASE("fraction of modified locations") {
    const double r = 0.3;
    const Eigen::VectorXd y = field_jitter(x, JitterConfig{0.2, r, 5}, st);
    const double n = static_cast<double>(x.size());
    const double changed = static_cast<double>((y.array() != x.array()).count());
    CHECK(std::abs(changed - r * n) <= 3.0 * std::sqrt(n * r * (1.0 - r)));
  }
}
