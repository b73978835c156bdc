#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vda/assimilate.hpp"
#include "vda/codec.hpp"
#include "vda/field.hpp"
#include "vda/reduced_space.hpp"
#include "vda/report.hpp"

namespace vda {

/// Observation count, either absolute or as a fraction of n.
struct ObsCount {
  double value = 1.0;
  bool fraction = true;
  /// Absolute count in [1, n]; throws InvalidArgument when out of range.
  std::size_t resolve(std::size_t n) const;
  static ObsCount absolute(std::size_t m) { return {static_cast<double>(m), false}; }
  static ObsCount of_state(double f) { return {f, true}; }
};

enum class Pipeline { Mono, Bi };
const char* to_string(Pipeline p);

struct SweepConfig {
  std::vector<std::size_t> taus;
  std::vector<ObsCount> obs_counts;
  double sigma0 = 0.005;
  std::optional<double> sigma_l;  // defaults to sigma0
  std::vector<Pipeline> pipelines{Pipeline::Mono};
  std::size_t repetitions = 5;  // timing only
  std::uint64_t seed = 0;
  bool noise = false;
  bool timing = false;  // run serially and report median-of-repetitions times
  std::size_t max_steps = 0;  // 0 = every test step
  bool propagate_errors = false;  // rethrow instead of recording a failed cell
  SolveOptions solve;
  void validate(std::size_t n, std::size_t samples) const;
};

/// Everything a sweep needs, in normalized units. `stats` maps states back to
/// field units for the metrics; `codec` is required only for the bi pipeline.
struct SweepData {
  FieldSeries test;
  BackgroundMatrix background;
  SvdFactors factors;
  std::optional<NormStats> stats;
  std::shared_ptr<const Codec> codec;
};

/// For every (pipeline, tau, M) cell: assimilate each test step against
/// observations of that step, then append one "mean" row. The bi pipeline has
/// no tau (column is 0) and always observes the full state; its M column only
/// names the cell so that it lines up with the mono rows. A cell that throws
/// yields a single "failed" row. Accuracy cells run in parallel; results are
/// independent of the thread count.
std::vector<MetricRecord> run_sweep(const SweepConfig& cfg, const SweepData& data);

struct OnlineTiming {
  double minimize_s = 0.0;
  double restore_s = 0.0;
  double total_s = 0.0;
};

/// Calls `run` `repetitions` times and returns the median of each phase.
OnlineTiming time_online(const std::function<Solution()>& run, std::size_t repetitions);

struct CompareConfig {
  std::size_t tau = 0;  // 0 = S
  double sigma0 = 0.005;
  std::optional<double> sigma_l;
  std::uint64_t seed = 0;
  bool noise = false;
  std::size_t max_steps = 0;
  SolveOptions solve;
};

/// Mono (tau, H = I) versus bi on every test step, with the condition numbers
/// of I + A in both spaces.
std::vector<CompareRow> run_compare(const CompareConfig& cfg, const SweepData& data);

}  // namespace vda
