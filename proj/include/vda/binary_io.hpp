#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>

namespace vda::io {

/// Little-endian writer over an output file. All multi-byte values are
/// serialized explicitly so files are portable across hosts.
class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);
  void magic(std::string_view tag);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void f64s(std::span<const double> values);
  /// Flushes and reports any stream failure as an Io error.
  void finish();

 private:
  void raw(const void* data, std::size_t bytes);
  std::ofstream out_;
  std::filesystem::path path_;
};

/// Reader over an entire file held in memory; every read is bounds-checked
/// and a short file raises ErrorCode::Truncated.
class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);
  /// Throws BadMagic if the next four bytes differ from `tag`.
  void expect_magic(std::string_view tag);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  void f64s(std::span<double> out);
  std::size_t remaining() const { return bytes_.size() - pos_; }
  /// Throws Truncated unless `count` binary64 values are still available.
  void require_doubles(std::uint64_t count, const char* what) const;

 private:
  void raw(void* out, std::size_t bytes);
  std::string bytes_;
  std::size_t pos_ = 0;
};

/// Multiplies extents and throws DimensionOverflow if the product (or the
/// byte count of that many doubles) exceeds 64 bits.
std::uint64_t checked_product(std::initializer_list<std::uint64_t> factors);

}  // namespace vda::io
