#include <limits>

#include "vda/binary_io.hpp"
#include "vda/error.hpp"
#include "vda/reduced_space.hpp"

namespace vda {
namespace {
constexpr std::uint32_t kVersion = 1;
}

void save_basis(const BasisCheckpoint& basis, const std::filesystem::path& path) {
  const auto& f = basis.factors;
  const auto n = static_cast<std::uint64_t>(f.U.rows());
  const auto s = static_cast<std::uint64_t>(f.sigma.size());
  require(f.U.cols() == static_cast<Eigen::Index>(s) && f.Wt.rows() == static_cast<Eigen::Index>(s) &&
              f.Wt.cols() == static_cast<Eigen::Index>(s) && basis.mean.size() == static_cast<Eigen::Index>(n),
          ErrorCode::ShapeMismatch, "save_basis: inconsistent shapes");
  require(basis.tau >= 1 && basis.tau <= s, ErrorCode::InvalidArgument, "save_basis: tau out of range");
  io::Writer w(path);
  w.magic("VDAB");
  w.u32(kVersion);
  w.u64(n);
  w.u64(s);
  w.u32(static_cast<std::uint32_t>(basis.tau));
  w.f64s({f.U.data(), static_cast<std::size_t>(f.U.size())});
  w.f64s({f.sigma.data(), static_cast<std::size_t>(f.sigma.size())});
  w.f64s({f.Wt.data(), static_cast<std::size_t>(f.Wt.size())});
  w.f64s({basis.mean.data(), static_cast<std::size_t>(basis.mean.size())});
  w.finish();
}

BasisCheckpoint load_basis(const std::filesystem::path& path) {
  io::Reader r(path);
  r.expect_magic("VDAB");
  const std::uint32_t version = r.u32();
  require(version == kVersion, ErrorCode::UnsupportedVersion, "VDAB: unsupported version " + std::to_string(version));
  const std::uint64_t n = r.u64();
  const std::uint64_t s = r.u64();
  const std::uint32_t tau = r.u32();
  require(n > 0 && s > 0 && s <= n, ErrorCode::InvalidArgument, "VDAB: invalid dimensions");
  require(tau >= 1 && tau <= s, ErrorCode::InvalidArgument, "VDAB: tau out of range");
  const std::uint64_t total = io::checked_product({n, s}) + io::checked_product({s, s}) + s + n;
  r.require_doubles(total, "VDAB");
  BasisCheckpoint out;
  out.tau = tau;
  out.factors.U.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s));
  out.factors.sigma.resize(static_cast<Eigen::Index>(s));
  out.factors.Wt.resize(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
  out.mean.resize(static_cast<Eigen::Index>(n));
  r.f64s({out.factors.U.data(), static_cast<std::size_t>(out.factors.U.size())});
  r.f64s({out.factors.sigma.data(), static_cast<std::size_t>(s)});
  r.f64s({out.factors.Wt.data(), static_cast<std::size_t>(out.factors.Wt.size())});
  r.f64s({out.mean.data(), static_cast<std::size_t>(n)});
  return out;
}

}  // namespace vda
