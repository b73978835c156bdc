#include "vda/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "vda/error.hpp"
#include "vda/metrics.hpp"
#include "vda/rng.hpp"

namespace vda {

std::size_t ObsCount::resolve(std::size_t n) const {
  require(std::isfinite(value) && value > 0.0, ErrorCode::InvalidArgument, "observation count must be positive");
  double m = value;
  if (fraction) {
    require(value <= 1.0, ErrorCode::InvalidArgument, "observation fraction must lie in (0, 1]");
    m = std::max(1.0, std::round(value * static_cast<double>(n)));
  } else {
    require(value == std::floor(value), ErrorCode::InvalidArgument, "observation count must be an integer");
  }
  require(m >= 1.0 && m <= static_cast<double>(n), ErrorCode::InvalidArgument,
          "observation count " + std::to_string(static_cast<long long>(m)) + " outside [1, n=" + std::to_string(n) + "]");
  return static_cast<std::size_t>(m);
}

const char* to_string(Pipeline p) { return p == Pipeline::Mono ? "mono" : "bi"; }

void SweepConfig::validate(std::size_t n, std::size_t samples) const {
  require(!pipelines.empty(), ErrorCode::InvalidArgument, "sweep: no pipelines selected");
  require(!obs_counts.empty(), ErrorCode::InvalidArgument, "sweep: empty observation-count list");
  for (const auto& m : obs_counts) m.resolve(n);
  const bool mono = std::find(pipelines.begin(), pipelines.end(), Pipeline::Mono) != pipelines.end();
  if (mono) {
    require(!taus.empty(), ErrorCode::InvalidArgument, "sweep: empty tau list");
    for (std::size_t t : taus) {
      require(t >= 1 && t <= samples, ErrorCode::InvalidArgument,
              "sweep: tau=" + std::to_string(t) + " outside [1, S=" + std::to_string(samples) + "]");
    }
  }
  require(sigma0 > 0.0 && std::isfinite(sigma0), ErrorCode::InvalidArgument, "sweep: sigma0 must be positive");
  if (sigma_l) require(*sigma_l > 0.0 && std::isfinite(*sigma_l), ErrorCode::InvalidArgument, "sweep: sigma_l must be positive");
  require(repetitions >= 1, ErrorCode::InvalidArgument, "sweep: repetitions must be at least 1");
  solve.lbfgs.validate();
}

OnlineTiming time_online(const std::function<Solution()>& run, std::size_t repetitions) {
  require(repetitions >= 1, ErrorCode::InvalidArgument, "time_online: repetitions must be at least 1");
  std::vector<double> mins, rests, totals;
  for (std::size_t r = 0; r < repetitions; ++r) {
    const Solution s = run();
    mins.push_back(s.minimize_s);
    rests.push_back(s.restore_s);
    totals.push_back(s.total_s);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
  };
  return {median(mins), median(rests), median(totals)};
}

namespace {

struct Cell {
  Pipeline pipeline;
  std::size_t tau;
  std::size_t m;
};

std::size_t step_count(const FieldSeries& test, std::size_t max_steps) {
  return max_steps == 0 ? test.steps() : std::min(test.steps(), max_steps);
}

Eigen::VectorXd denormalize(const Eigen::VectorXd& x, const std::optional<NormStats>& stats) {
  return stats ? invert_normalization(x, *stats) : x;
}

std::vector<MetricRecord> run_cell(const Cell& cell, std::size_t index, const SweepConfig& cfg, const SweepData& data) {
  const std::size_t n = data.test.points();
  const std::size_t steps = step_count(data.test, cfg.max_steps);
  const std::uint64_t cell_seed = derive_seed(cfg.seed, "sweep-cell", index);
  const Eigen::VectorXd x_b = denormalize(data.background.mean, data.stats);

  MetricRecord base;
  base.pipeline = to_string(cell.pipeline);
  base.tau = cell.pipeline == Pipeline::Mono ? cell.tau : 0;
  base.M = cell.m;
  base.sigma0 = cfg.sigma0;

  std::vector<MetricRecord> rows;
  try {
    std::optional<MonoAssimilator> mono;
    std::optional<BiAssimilator> bi;
    ObservationOperator op = ObservationOperator::identity(n);
    if (cell.pipeline == Pipeline::Mono) {
      mono.emplace(truncate(data.factors, cell.tau), data.background.mean, data.stats);
      op = draw_observation_operator(n, cell.m, derive_seed(cell_seed, "locations"));
    } else {
      require(data.codec != nullptr, ErrorCode::InvalidArgument, "sweep: bi pipeline requested without a codec");
      bi.emplace(data.codec, data.background, cfg.sigma_l.value_or(cfg.sigma0), data.stats);
    }

    std::optional<MonoProblem> mono_problem;
    for (std::size_t t = 0; t < steps; ++t) {
      const Eigen::VectorXd truth = data.test.step(t);
      const ObservationSet obs = observe(op, truth, cfg.sigma0, derive_seed(cell_seed, "noise", t), cfg.noise);
      std::function<Solution()> run;
      if (mono) {
        // H V_tau depends only on the operator, so it is built once per cell.
        if (!mono_problem) {
          mono_problem = mono->prepare(obs);
        } else {
          mono_problem->cost.misfit = misfit(obs, mono->mean());
        }
        run = [&] { return mono->solve(*mono_problem, cfg.solve); };
      } else {
        const BiProblem problem = bi->prepare(obs);
        run = [&, problem] { return bi->solve(problem, cfg.solve); };
      }
      Solution sol = run();
      MetricRecord r = base;
      r.step = std::to_string(data.test.labels()[t]);
      const Eigen::VectorXd x_obs = denormalize(truth, data.stats);
      r.da_mse = da_mse(sol.x_da, x_obs);
      r.ref_mse = ref_mse(x_b, x_obs);
      r.iterations = static_cast<double>(sol.iterations);
      r.converged = sol.converged;
      if (cfg.timing) {
        const OnlineTiming timing = time_online(run, cfg.repetitions);
        r.minimize_s = timing.minimize_s;
        r.restore_s = timing.restore_s;
        r.total_s = timing.total_s;
      } else {
        r.minimize_s = sol.minimize_s;
        r.restore_s = sol.restore_s;
        r.total_s = sol.total_s;
      }
      rows.push_back(std::move(r));
    }
  } catch (const Error&) {
    if (cfg.propagate_errors) throw;
    MetricRecord r = base;
    r.step = "failed";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.da_mse = r.ref_mse = r.iterations = r.minimize_s = r.restore_s = r.total_s = nan;
    r.converged = false;
    return {r};
  }

  MetricRecord mean = base;
  mean.step = "mean";
  mean.converged = true;
  for (const MetricRecord& r : rows) {
    mean.da_mse += r.da_mse;
    mean.ref_mse += r.ref_mse;
    mean.iterations += r.iterations;
    mean.minimize_s += r.minimize_s;
    mean.restore_s += r.restore_s;
    mean.total_s += r.total_s;
    mean.converged = mean.converged && r.converged;
  }
  const double count = static_cast<double>(std::max<std::size_t>(rows.size(), 1));
  mean.da_mse /= count;
  mean.ref_mse /= count;
  mean.iterations /= count;
  mean.minimize_s /= count;
  mean.restore_s /= count;
  mean.total_s /= count;
  rows.push_back(mean);
  return rows;
}

}  // namespace

std::vector<MetricRecord> run_sweep(const SweepConfig& cfg, const SweepData& data) {
  const std::size_t n = data.test.points();
  require(n == data.background.state_size(), ErrorCode::ShapeMismatch, "sweep: test data and background differ in size");
  cfg.validate(n, data.factors.rank_capacity());
  require(!data.test.empty(), ErrorCode::InvalidArgument, "sweep: empty test split");

  std::vector<Cell> cells;
  for (Pipeline p : cfg.pipelines) {
    if (p == Pipeline::Mono) {
      for (std::size_t tau : cfg.taus)
        for (const ObsCount& m : cfg.obs_counts) cells.push_back({p, tau, m.resolve(n)});
    } else {
      for (const ObsCount& m : cfg.obs_counts) cells.push_back({p, 0, m.resolve(n)});
    }
  }

  std::vector<std::vector<MetricRecord>> results(cells.size());
  const auto count = static_cast<std::ptrdiff_t>(cells.size());
  if (cfg.timing) {
    for (std::ptrdiff_t i = 0; i < count; ++i) results[i] = run_cell(cells[i], static_cast<std::size_t>(i), cfg, data);
  } else {
    // Exceptions must not escape the parallel region; the first one (by cell
    // order) is rethrown afterwards.
    std::vector<std::exception_ptr> errors(cells.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      try {
        results[i] = run_cell(cells[i], static_cast<std::size_t>(i), cfg, data);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<MetricRecord> out;
  for (auto& r : results) out.insert(out.end(), r.begin(), r.end());
  return out;
}

std::vector<CompareRow> run_compare(const CompareConfig& cfg, const SweepData& data) {
  const std::size_t n = data.test.points();
  const std::size_t samples = data.factors.rank_capacity();
  require(n == data.background.state_size(), ErrorCode::ShapeMismatch, "compare: test data and background differ in size");
  require(data.codec != nullptr, ErrorCode::InvalidArgument, "compare: a codec is required");
  const std::size_t tau = cfg.tau == 0 ? samples : cfg.tau;
  require(tau >= 1 && tau <= samples, ErrorCode::InvalidArgument, "compare: tau out of range");
  cfg.solve.lbfgs.validate();

  const MonoAssimilator mono(truncate(data.factors, tau), data.background.mean, data.stats);
  const BiAssimilator bi(data.codec, data.background, cfg.sigma_l.value_or(cfg.sigma0), data.stats);
  const ObservationOperator op = ObservationOperator::identity(n);
  const Eigen::VectorXd x_b = denormalize(data.background.mean, data.stats);

  const std::size_t steps = step_count(data.test, cfg.max_steps);
  std::vector<CompareRow> rows(steps);
  std::optional<MonoProblem> mono_problem;
  for (std::size_t t = 0; t < steps; ++t) {
    const Eigen::VectorXd truth = data.test.step(t);
    const ObservationSet obs = observe(op, truth, cfg.sigma0, derive_seed(cfg.seed, "compare-noise", t), cfg.noise);
    if (!mono_problem) {
      mono_problem = mono.prepare(obs);
    } else {
      mono_problem->cost.misfit = misfit(obs, mono.mean());
    }
    const BiProblem bi_problem = bi.prepare(obs);
    const Solution ms = mono.solve(*mono_problem, cfg.solve);
    const Solution bs = bi.solve(bi_problem, cfg.solve);

    CompareRow& r = rows[t];
    r.step = std::to_string(data.test.labels()[t]);
    const Eigen::VectorXd x_obs = denormalize(truth, data.stats);
    r.ref_mse = ref_mse(x_b, x_obs);
    r.mono_da_mse = da_mse(ms.x_da, x_obs);
    r.bi_da_mse = da_mse(bs.x_da, x_obs);
    r.mse_diff = r.bi_da_mse - r.mono_da_mse;
    r.w_maxdiff = (ms.w - bs.w).cwiseAbs().maxCoeff();
    r.mono_iterations = static_cast<double>(ms.iterations);
    r.bi_iterations = static_cast<double>(bs.iterations);
    r.mono_total_s = ms.total_s;
    r.bi_total_s = bs.total_s;
    r.mono_cond = condition_number(normal_equations(mono_problem->cost));
    r.bi_cond = condition_number(normal_equations(bi_problem.cost));
  }
  return rows;
}

}  // namespace vda
