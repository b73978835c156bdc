#include "vda/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <tuple>

#include "vda/error.hpp"
#include "vda/rng.hpp"

namespace vda {

std::array<std::size_t, 3> Grid3::unflatten(std::size_t index) const {
  const std::size_t i = index % nx;
  const std::size_t rest = index / nx;
  return {i, rest % ny, rest / ny};
}

void Grid3::validate() const {
  require(nx > 0 && ny > 0 && nz > 0, ErrorCode::InvalidArgument, "grid extents must be positive");
  for (double h : spacing) {
    require(h > 0.0 && std::isfinite(h), ErrorCode::InvalidArgument, "grid spacing must be positive");
  }
}

FieldSeries::FieldSeries(Grid3 grid, Eigen::MatrixXd data, std::vector<std::int64_t> labels)
    : grid_(grid), data_(std::move(data)), labels_(std::move(labels)) {
  grid_.validate();
  require(static_cast<std::size_t>(data_.rows()) == grid_.size(), ErrorCode::ShapeMismatch,
          "FieldSeries: data rows do not match the grid size");
  if (labels_.empty()) {
    labels_.resize(static_cast<std::size_t>(data_.cols()));
    std::iota(labels_.begin(), labels_.end(), std::int64_t{0});
  }
  require(labels_.size() == static_cast<std::size_t>(data_.cols()), ErrorCode::ShapeMismatch,
          "FieldSeries: one label per step required");
  for (std::size_t t = 1; t < labels_.size(); ++t) {
    require(labels_[t] > labels_[t - 1], ErrorCode::InvalidArgument,
            "FieldSeries: labels must be strictly increasing");
  }
  require(data_.allFinite(), ErrorCode::NonFinite, "FieldSeries: non-finite values");
}

FieldSeries FieldSeries::slice(std::size_t begin, std::size_t end) const {
  require(begin <= end && end <= steps(), ErrorCode::InvalidArgument, "FieldSeries::slice out of range");
  const auto b = static_cast<Eigen::Index>(begin);
  const auto count = static_cast<Eigen::Index>(end - begin);
  std::vector<std::int64_t> labels(labels_.begin() + static_cast<std::ptrdiff_t>(begin),
                                   labels_.begin() + static_cast<std::ptrdiff_t>(end));
  return FieldSeries(grid_, data_.middleCols(b, count), std::move(labels));
}

void JitterConfig::validate() const {
  require(amplitude >= 0.0 && amplitude <= 1.0, ErrorCode::InvalidArgument, "jitter amplitude must lie in [0,1]");
  require(frequency >= 0.0 && frequency <= 1.0, ErrorCode::InvalidArgument, "jitter frequency must lie in [0,1]");
}

void SynthConfig::validate() const {
  grid.validate();
  require(modes > 0, ErrorCode::InvalidArgument, "synthetic modes must be positive");
  require(modes <= grid.size(), ErrorCode::InvalidArgument, "synthetic modes exceed the grid size");
  require(rho > 0.0 && rho < 1.0, ErrorCode::InvalidArgument, "AR coefficient must lie in (0,1)");
  require(nonlinearity >= 0.0 && std::isfinite(nonlinearity), ErrorCode::InvalidArgument,
          "nonlinearity must be non-negative");
  require(amplitude >= 0.0 && std::isfinite(amplitude), ErrorCode::InvalidArgument, "amplitude must be non-negative");
}

Eigen::MatrixXd synthetic_modes(const Grid3& grid, std::size_t modes) {
  grid.validate();
  require(modes <= grid.size(), ErrorCode::InvalidArgument, "synthetic modes exceed the grid size");
  // Wavenumber triples ordered by total frequency, then lexicographically.
  std::vector<std::array<std::size_t, 3>> waves;
  waves.reserve(grid.size());
  for (std::size_t kz = 0; kz < grid.nz; ++kz)
    for (std::size_t ky = 0; ky < grid.ny; ++ky)
      for (std::size_t kx = 0; kx < grid.nx; ++kx) waves.push_back({kx, ky, kz});
  std::stable_sort(waves.begin(), waves.end(), [](const auto& a, const auto& b) {
    const std::size_t sa = a[0] + a[1] + a[2];
    const std::size_t sb = b[0] + b[1] + b[2];
    if (sa != sb) return sa < sb;
    return std::tie(a[2], a[1], a[0]) < std::tie(b[2], b[1], b[0]);
  });

  const std::size_t n = grid.size();
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(modes));
  const double pi = std::numbers::pi;
  for (std::size_t m = 0; m < modes; ++m) {
    const auto& w = waves[m];
    for (std::size_t idx = 0; idx < n; ++idx) {
      const auto [i, j, k] = grid.unflatten(idx);
      const double cx = std::cos(pi * static_cast<double>(w[0]) * (static_cast<double>(i) + 0.5) / static_cast<double>(grid.nx));
      const double cy = std::cos(pi * static_cast<double>(w[1]) * (static_cast<double>(j) + 0.5) / static_cast<double>(grid.ny));
      const double cz = std::cos(pi * static_cast<double>(w[2]) * (static_cast<double>(k) + 0.5) / static_cast<double>(grid.nz));
      basis(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(m)) = cx * cy * cz;
    }
    auto col = basis.col(static_cast<Eigen::Index>(m));
    col /= std::sqrt(col.squaredNorm() / static_cast<double>(n));
  }
  return basis;
}

FieldSeries generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = cfg.grid.size();
  const std::size_t k = cfg.modes;
  const auto T = static_cast<Eigen::Index>(cfg.steps);
  const Eigen::MatrixXd basis = synthetic_modes(cfg.grid, k);

  // Mode weights decay so the singular spectrum has a clear ordering; the
  // overall scale keeps the linear part near unit variance per location.
  Eigen::VectorXd weight(static_cast<Eigen::Index>(k));
  for (std::size_t m = 0; m < k; ++m) weight[static_cast<Eigen::Index>(m)] = 1.0 / std::sqrt(1.0 + static_cast<double>(m));
  const double scale = std::sqrt((1.0 - cfg.rho * cfg.rho) / weight.squaredNorm());

  Rng rng(seed, "synthetic");
  Eigen::VectorXd coeff(static_cast<Eigen::Index>(k));
  const double stationary = 1.0 / std::sqrt(1.0 - cfg.rho * cfg.rho);
  for (Eigen::Index m = 0; m < coeff.size(); ++m) coeff[m] = stationary * rng.normal();

  Eigen::MatrixXd data(static_cast<Eigen::Index>(n), T);
  for (Eigen::Index t = 0; t < T; ++t) {
    if (t > 0) {
      for (Eigen::Index m = 0; m < coeff.size(); ++m) coeff[m] = cfg.rho * coeff[m] + rng.normal();
    }
    const Eigen::VectorXd linear = basis * (weight.cwiseProduct(coeff) * scale);
    data.col(t) = cfg.amplitude * (linear + cfg.nonlinearity * linear.array().tanh().matrix());
  }
  return FieldSeries(cfg.grid, std::move(data));
}

std::pair<FieldSeries, FieldSeries> split_series(const FieldSeries& series, double fraction) {
  require(!series.empty(), ErrorCode::InvalidArgument, "split_series: empty series");
  require(fraction > 0.0 && fraction < 1.0, ErrorCode::InvalidArgument, "split_series: fraction must lie in (0,1)");
  const auto T = series.steps();
  auto train = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(T)));
  // Guard against fraction*T landing a hair above an integer through rounding.
  if (train > 0 && std::abs(fraction * static_cast<double>(T) - static_cast<double>(train - 1)) < 1e-9) --train;
  train = std::min(train, T);
  return {series.slice(0, train), series.slice(train, T)};
}

Eigen::VectorXd column_mean(const Eigen::MatrixXd& data) {
  require(data.cols() > 0, ErrorCode::InvalidArgument, "column_mean: no columns");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(data.rows());
  for (Eigen::Index t = 0; t < data.cols(); ++t) sum += data.col(t);
  return sum / static_cast<double>(data.cols());
}

NormStats compute_norm_stats(const FieldSeries& train, NormMode mode) {
  require(!train.empty(), ErrorCode::InvalidArgument, "compute_norm_stats: empty training series");
  const Eigen::MatrixXd& x = train.data();
  const auto n = x.rows();
  NormStats stats;
  stats.mode = mode;
  if (mode == NormMode::PerLocation) {
    require(x.cols() > 1, ErrorCode::InvalidArgument,
            "compute_norm_stats: a single step has zero variance at every location");
    stats.mean = column_mean(x);
    Eigen::VectorXd var = Eigen::VectorXd::Zero(n);
    for (Eigen::Index t = 0; t < x.cols(); ++t) var += (x.col(t) - stats.mean).cwiseAbs2();
    var /= static_cast<double>(x.cols());
    stats.std = var.cwiseSqrt().cwiseMax(kStdFloor);
  } else {
    const double count = static_cast<double>(x.size());
    const double mean = x.sum() / count;
    const double var = (x.array() - mean).square().sum() / count;
    stats.mean = Eigen::VectorXd::Constant(n, mean);
    stats.std = Eigen::VectorXd::Constant(n, std::max(std::sqrt(var), kStdFloor));
  }
  return stats;
}

namespace {
void check_stats(const Eigen::VectorXd& field, const NormStats& stats) {
  require(field.size() == stats.mean.size() && field.size() == stats.std.size(), ErrorCode::ShapeMismatch,
          "normalization: field and statistics sizes differ");
}
}  // namespace

Eigen::VectorXd apply_normalization(const Eigen::VectorXd& field, const NormStats& stats) {
  check_stats(field, stats);
  return ((field - stats.mean).array() / stats.std.array()).matrix();
}

Eigen::VectorXd invert_normalization(const Eigen::VectorXd& field, const NormStats& stats) {
  check_stats(field, stats);
  return (field.array() * stats.std.array()).matrix() + stats.mean;
}

FieldSeries apply_normalization(const FieldSeries& series, const NormStats& stats) {
  require(series.points() == static_cast<std::size_t>(stats.mean.size()), ErrorCode::ShapeMismatch,
          "normalization: series and statistics sizes differ");
  Eigen::MatrixXd out = series.data();
  for (Eigen::Index t = 0; t < out.cols(); ++t) {
    out.col(t) = ((out.col(t) - stats.mean).array() / stats.std.array()).matrix();
  }
  return FieldSeries(series.grid(), std::move(out), series.labels());
}

FieldSeries mean_center(const FieldSeries& series, const Eigen::VectorXd& mean) {
  require(series.points() == static_cast<std::size_t>(mean.size()), ErrorCode::ShapeMismatch,
          "mean_center: mean size differs from the grid size");
  Eigen::MatrixXd out = series.data();
  out.colwise() -= mean;
  return FieldSeries(series.grid(), std::move(out), series.labels());
}

Eigen::VectorXd field_jitter(const Eigen::VectorXd& field, const JitterConfig& cfg, const NormStats& stats) {
  cfg.validate();
  require(field.size() == stats.std.size(), ErrorCode::ShapeMismatch, "field_jitter: field and statistics sizes differ");
  Eigen::VectorXd out = field;
  const auto n = static_cast<std::size_t>(field.size());
  const auto count = static_cast<std::size_t>(std::llround(cfg.frequency * static_cast<double>(n)));
  if (count == 0 || cfg.amplitude == 0.0) return out;
  Rng rng(cfg.seed, "field-jitter");
  for (std::size_t idx : sample_without_replacement(n, count, rng)) {
    const auto i = static_cast<Eigen::Index>(idx);
    out[i] += cfg.amplitude * stats.std[i] * rng.normal();
  }
  return out;
}

StateField field_jitter(const StateField& field, const JitterConfig& cfg, const NormStats& stats) {
  return {field.grid, field_jitter(field.values, cfg, stats)};
}

}  // namespace vda
