#include "vda/binary_io.hpp"

#include <bit>
#include <cstring>
#include <iterator>
#include <limits>
#include <vector>

#include "vda/error.hpp"

namespace vda::io {
namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    T out{};
    auto* src = reinterpret_cast<const unsigned char*>(&v);
    auto* dst = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
    return out;
  }
}

}  // namespace

Writer::Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
  require(out_.good(), ErrorCode::Io, "cannot open for writing: " + path.string());
}

void Writer::raw(const void* data, std::size_t bytes) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void Writer::magic(std::string_view tag) { raw(tag.data(), tag.size()); }
void Writer::u8(std::uint8_t v) { raw(&v, 1); }

void Writer::u32(std::uint32_t v) {
  v = to_little(v);
  raw(&v, sizeof v);
}

void Writer::u64(std::uint64_t v) {
  v = to_little(v);
  raw(&v, sizeof v);
}

void Writer::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void Writer::f64s(std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    raw(values.data(), values.size_bytes());
  } else {
    for (double v : values) f64(v);
  }
}

void Writer::finish() {
  out_.flush();
  require(out_.good(), ErrorCode::Io, "write failed: " + path_.string());
  out_.close();
}

Reader::Reader(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::Io, "cannot open for reading: " + path.string());
  bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void Reader::raw(void* out, std::size_t bytes) {
  require(remaining() >= bytes, ErrorCode::Truncated, "unexpected end of file");
  std::memcpy(out, bytes_.data() + pos_, bytes);
  pos_ += bytes;
}

void Reader::expect_magic(std::string_view tag) {
  require(remaining() >= tag.size(), ErrorCode::Truncated, "file shorter than its magic tag");
  require(std::string_view(bytes_.data() + pos_, tag.size()) == tag, ErrorCode::BadMagic,
          "bad magic: expected " + std::string(tag));
  pos_ += tag.size();
}

std::uint8_t Reader::u8() {
  std::uint8_t v = 0;
  raw(&v, 1);
  return v;
}

std::uint32_t Reader::u32() {
  std::uint32_t v = 0;
  raw(&v, sizeof v);
  return to_little(v);
}

std::uint64_t Reader::u64() {
  std::uint64_t v = 0;
  raw(&v, sizeof v);
  return to_little(v);
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

void Reader::f64s(std::span<double> out) {
  require(remaining() / sizeof(double) >= out.size(), ErrorCode::Truncated, "unexpected end of file");
  if constexpr (std::endian::native == std::endian::little) {
    raw(out.data(), out.size_bytes());
  } else {
    for (double& v : out) v = f64();
  }
}

void Reader::require_doubles(std::uint64_t count, const char* what) const {
  require(remaining() / sizeof(double) >= count, ErrorCode::Truncated,
          std::string(what) + ": header declares more values than the file holds");
}

std::uint64_t checked_product(std::initializer_list<std::uint64_t> factors) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max() / sizeof(double);
  std::uint64_t p = 1;
  for (std::uint64_t f : factors) {
    if (f != 0 && p > kMax / f) fail(ErrorCode::DimensionOverflow, "declared dimensions overflow");
    p *= f;
  }
  return p;
}

}  // namespace vda::io
