#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace vda {

/// One row of the report CSV. `step` is the timestep label, "mean" for a
/// cell aggregate, or "failed" for a cell that raised an error.
struct MetricRecord {
  std::string pipeline;
  std::size_t tau = 0;  // 0 for the bi pipeline
  std::size_t M = 0;
  double sigma0 = 0.0;
  std::string step;
  double da_mse = 0.0;
  double ref_mse = 0.0;
  double iterations = 0.0;  // fractional on aggregate rows
  double minimize_s = 0.0;
  double restore_s = 0.0;
  double total_s = 0.0;
  bool converged = false;

  friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

inline constexpr const char* kReportHeader =
    "pipeline,tau,M,sigma0,step,da_mse,ref_mse,iterations,minimize_s,restore_s,total_s,converged";

/// Doubles are written with 17 significant digits, so finite values re-parse
/// exactly.
std::string format_double(double v);
double parse_double(const std::string& s);

void export_report(const std::vector<MetricRecord>& records, const std::filesystem::path& path);
std::vector<MetricRecord> import_report(const std::filesystem::path& path);

/// Splits one CSV line on commas (report fields never contain commas).
std::vector<std::string> split_csv_line(const std::string& line);

/// Per-step mono-versus-bi comparison.
struct CompareRow {
  std::string step;
  double ref_mse = 0.0;
  double mono_da_mse = 0.0;
  double bi_da_mse = 0.0;
  double mse_diff = 0.0;   // bi - mono
  double w_maxdiff = 0.0;  // ||w_mono - w_bi||_inf
  double mono_iterations = 0.0;
  double bi_iterations = 0.0;
  double mono_total_s = 0.0;
  double bi_total_s = 0.0;
  double mono_cond = 0.0;  // condition number of I + A
  double bi_cond = 0.0;
};

inline constexpr const char* kCompareHeader =
    "step,ref_mse,mono_da_mse,bi_da_mse,mse_diff,w_maxdiff,mono_iterations,bi_iterations,mono_total_s,bi_total_s,"
    "mono_cond,bi_cond";

void export_compare(const std::vector<CompareRow>& rows, const std::filesystem::path& path);

}  // namespace vda
