#include "vda/report.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "vda/error.hpp"

namespace vda {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  require(!s.empty(), ErrorCode::InvalidArgument, "empty numeric field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  require(end == s.c_str() + s.size(), ErrorCode::InvalidArgument, "malformed numeric field '" + s + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  require(static_cast<bool>(out), ErrorCode::Io, "write failed for " + path.string());
}

std::size_t parse_size(const std::string& s) {
  const double v = parse_double(s);
  require(v >= 0.0 && v == std::floor(v), ErrorCode::InvalidArgument, "expected a non-negative integer, got '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

void export_report(const std::vector<MetricRecord>& records, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << kReportHeader << '\n';
  for (const MetricRecord& r : records) {
    out << r.pipeline << ',' << r.tau << ',' << r.M << ',' << format_double(r.sigma0) << ',' << r.step << ','
        << format_double(r.da_mse) << ',' << format_double(r.ref_mse) << ',' << format_double(r.iterations) << ','
        << format_double(r.minimize_s) << ',' << format_double(r.restore_s) << ',' << format_double(r.total_s) << ','
        << (r.converged ? 1 : 0) << '\n';
  }
  close_out(out, path);
}

std::vector<MetricRecord> import_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == kReportHeader, ErrorCode::InvalidArgument,
          "report header mismatch in " + path.string());
  std::vector<MetricRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    require(f.size() == 12, ErrorCode::InvalidArgument,
            "report line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    MetricRecord r;
    r.pipeline = f[0];
    r.tau = parse_size(f[1]);
    r.M = parse_size(f[2]);
    r.sigma0 = parse_double(f[3]);
    r.step = f[4];
    r.da_mse = parse_double(f[5]);
    r.ref_mse = parse_double(f[6]);
    r.iterations = parse_double(f[7]);
    r.minimize_s = parse_double(f[8]);
    r.restore_s = parse_double(f[9]);
    r.total_s = parse_double(f[10]);
    require(f[11] == "0" || f[11] == "1", ErrorCode::InvalidArgument, "converged flag must be 0 or 1");
    r.converged = f[11] == "1";
    out.push_back(std::move(r));
  }
  return out;
}

void export_compare(const std::vector<CompareRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << kCompareHeader << '\n';
  for (const CompareRow& r : rows) {
    out << r.step << ',' << format_double(r.ref_mse) << ',' << format_double(r.mono_da_mse) << ','
        << format_double(r.bi_da_mse) << ',' << format_double(r.mse_diff) << ',' << format_double(r.w_maxdiff) << ','
        << format_double(r.mono_iterations) << ',' << format_double(r.bi_iterations) << ','
        << format_double(r.mono_total_s) << ',' << format_double(r.bi_total_s) << ',' << format_double(r.mono_cond)
        << ',' << format_double(r.bi_cond) << '\n';
  }
  close_out(out, path);
}

}  // namespace vda
