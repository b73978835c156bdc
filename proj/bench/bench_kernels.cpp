// Serial reference kernels versus their OpenMP versions.
// Usage: vda_bench [n] [S] [repetitions]
// Prints one CSV row per kernel on stdout.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <vector>

#include "vda/kernels.hpp"
#include "vda/rng.hpp"

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  vda::Rng rng(seed, "bench");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

double median_seconds(const std::function<void()>& fn, int reps) {
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto a = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

template <typename Result>
void row(const char* name, const std::function<Result()>& serial, const std::function<Result()>& parallel, int reps) {
  Result rs;
  Result rp;
  const double ts = median_seconds([&] { rs = serial(); }, reps);
  const double tp = median_seconds([&] { rp = parallel(); }, reps);
  const double diff = (rs - rp).cwiseAbs().maxCoeff();
  std::printf("%s,%d,%.6e,%.6e,%.3f,%.3e\n", name, vda::kernels::max_threads(), ts, tp, ts / tp, diff);
}

}  // namespace

int main(int argc, char** argv) {
  const Eigen::Index n = argc > 1 ? std::atol(argv[1]) : 100000;
  const Eigen::Index s = argc > 2 ? std::atol(argv[2]) : 128;
  const int reps = argc > 3 ? std::atoi(argv[3]) : 5;
  if (n < 1 || s < 1 || s > n || reps < 1) {
    std::fprintf(stderr, "usage: vda_bench [n] [S] [repetitions] with 1 <= S <= n\n");
    return 1;
  }

  const Eigen::MatrixXd a = random_matrix(n, s, 1);
  const Eigen::VectorXd x = random_matrix(s, 1, 2);
  const Eigen::VectorXd y = random_matrix(n, 1, 3);
  const Eigen::MatrixXd b = random_matrix(s, s, 4);
  const Eigen::VectorXd sigma = random_matrix(s, 1, 5).cwiseAbs();
  std::vector<std::size_t> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto tau = static_cast<std::size_t>(s);

  namespace k = vda::kernels;
  std::printf("kernel,threads,serial_s,parallel_s,speedup,max_abs_diff\n");
  row<Eigen::VectorXd>("gemv", [&] { return k::serial::gemv(a, x); }, [&] { return k::gemv(a, x); }, reps);
  row<Eigen::VectorXd>("gemv_t", [&] { return k::serial::gemv_t(a, y); }, [&] { return k::gemv_t(a, y); }, reps);
  row<Eigen::MatrixXd>("matmul", [&] { return k::serial::matmul(a, b); }, [&] { return k::matmul(a, b); }, reps);
  row<Eigen::MatrixXd>("gram", [&] { return k::serial::gram(a); }, [&] { return k::gram(a); }, reps);
  row<Eigen::MatrixXd>("low_rank_rows", [&] { return k::serial::low_rank_rows(a, sigma, b, tau, rows); },
                       [&] { return k::low_rank_rows(a, sigma, b, tau, rows); }, reps);
  return 0;
}
