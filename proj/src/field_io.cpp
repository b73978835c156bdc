#include "vda/field_io.hpp"

#include <limits>

#include "vda/binary_io.hpp"
#include "vda/error.hpp"

namespace vda {
namespace {
constexpr std::uint32_t kVersion = 1;
}

void save_series(const FieldSeries& series, const std::filesystem::path& path) {
  const Grid3& g = series.grid();
  constexpr auto kU32 = std::numeric_limits<std::uint32_t>::max();
  require(g.nx <= kU32 && g.ny <= kU32 && g.nz <= kU32, ErrorCode::DimensionOverflow,
          "save_series: grid extent does not fit in u32");
  io::Writer w(path);
  w.magic("VDAF");
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(g.nx));
  w.u32(static_cast<std::uint32_t>(g.ny));
  w.u32(static_cast<std::uint32_t>(g.nz));
  w.u64(series.steps());
  const Eigen::MatrixXd& d = series.data();
  w.f64s({d.data(), static_cast<std::size_t>(d.size())});
  w.finish();
}

FieldSeries load_series(const std::filesystem::path& path) {
  io::Reader r(path);
  r.expect_magic("VDAF");
  const std::uint32_t version = r.u32();
  require(version == kVersion, ErrorCode::UnsupportedVersion, "VDAF: unsupported version " + std::to_string(version));
  Grid3 grid;
  grid.nx = r.u32();
  grid.ny = r.u32();
  grid.nz = r.u32();
  const std::uint64_t steps = r.u64();
  require(grid.nx > 0 && grid.ny > 0 && grid.nz > 0, ErrorCode::InvalidArgument, "VDAF: zero grid extent");
  const std::uint64_t count = io::checked_product({grid.nx, grid.ny, grid.nz, steps});
  require(steps <= static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max()), ErrorCode::DimensionOverflow,
          "VDAF: step count overflows");
  r.require_doubles(count, "VDAF");
  Eigen::MatrixXd data(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(steps));
  r.f64s({data.data(), static_cast<std::size_t>(count)});
  return FieldSeries(grid, std::move(data));
}

}  // namespace vda
