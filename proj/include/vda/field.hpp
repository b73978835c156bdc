#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vda {

/// Regular 3D grid. Flattened index = i + nx * (j + ny * k): x fastest, then
/// y, then z. Spacing is carried for provenance only.
struct Grid3 {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t nz = 0;
  std::array<double, 3> spacing{1.0, 1.0, 1.0};

  std::size_t size() const { return nx * ny * nz; }
  std::size_t flatten(std::size_t i, std::size_t j, std::size_t k) const { return i + nx * (j + ny * k); }
  std::array<std::size_t, 3> unflatten(std::size_t index) const;
  /// Throws InvalidArgument on a zero extent or non-positive spacing.
  void validate() const;

  friend bool operator==(const Grid3& a, const Grid3& b) {
    return a.nx == b.nx && a.ny == b.ny && a.nz == b.nz;
  }
};

struct StateField {
  Grid3 grid;
  Eigen::VectorXd values;
};

/// Ordered sequence of fields on one grid. Column t of `data()` is step t.
class FieldSeries {
 public:
  FieldSeries() = default;
  /// Labels default to 0..T-1 when empty.
  FieldSeries(Grid3 grid, Eigen::MatrixXd data, std::vector<std::int64_t> labels = {});

  const Grid3& grid() const { return grid_; }
  const Eigen::MatrixXd& data() const { return data_; }
  const std::vector<std::int64_t>& labels() const { return labels_; }
  std::size_t steps() const { return static_cast<std::size_t>(data_.cols()); }
  std::size_t points() const { return static_cast<std::size_t>(data_.rows()); }
  bool empty() const { return data_.cols() == 0; }

  Eigen::VectorXd step(std::size_t t) const { return data_.col(static_cast<Eigen::Index>(t)); }
  StateField field(std::size_t t) const { return {grid_, step(t)}; }
  /// Steps [begin, end) with their labels.
  FieldSeries slice(std::size_t begin, std::size_t end) const;

 private:
  Grid3 grid_;
  Eigen::MatrixXd data_;
  std::vector<std::int64_t> labels_;
};

enum class NormMode { Scalar, PerLocation };

inline constexpr double kStdFloor = 1e-8;

/// Training-split statistics. In scalar mode every entry of mean/std holds the
/// same value, so apply/invert never branch on the mode.
struct NormStats {
  NormMode mode = NormMode::PerLocation;
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

struct JitterConfig {
  double amplitude = 0.0;  // p
  double frequency = 0.0;  // r
  std::uint64_t seed = 0;
  void validate() const;
};

struct SynthConfig {
  Grid3 grid;
  std::size_t steps = 0;
  std::size_t modes = 8;
  double rho = 0.95;
  double nonlinearity = 0.5;
  double amplitude = 1.0;
  void validate() const;
};

/// Low-frequency cosine modes driven by independent AR(1) coefficients, plus an
/// elementwise tanh term scaled by `nonlinearity`.
FieldSeries generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

/// The K spatial modes used by generate_synthetic, unit RMS, as columns.
Eigen::MatrixXd synthetic_modes(const Grid3& grid, std::size_t modes);

/// train = first ceil(fraction * T) steps, test = the rest; order preserved.
std::pair<FieldSeries, FieldSeries> split_series(const FieldSeries& series, double fraction);

NormStats compute_norm_stats(const FieldSeries& train, NormMode mode);
Eigen::VectorXd apply_normalization(const Eigen::VectorXd& field, const NormStats& stats);
Eigen::VectorXd invert_normalization(const Eigen::VectorXd& field, const NormStats& stats);
FieldSeries apply_normalization(const FieldSeries& series, const NormStats& stats);

FieldSeries mean_center(const FieldSeries& series, const Eigen::VectorXd& mean);
Eigen::VectorXd column_mean(const Eigen::MatrixXd& data);

/// Adds N(0, (p * std_i)^2) noise at round(r * n) locations drawn without
/// replacement; all other locations are copied unchanged.
Eigen::VectorXd field_jitter(const Eigen::VectorXd& field, const JitterConfig& cfg, const NormStats& stats);
StateField field_jitter(const StateField& field, const JitterConfig& cfg, const NormStats& stats);

}  // namespace vda
