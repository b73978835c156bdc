#include <string>

#include "vda/binary_io.hpp"
#include "vda/codec.hpp"
#include "vda/error.hpp"

namespace vda {
namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kTagLinear = 2;

void write_header(io::Writer& w, const std::vector<std::size_t>& widths, std::uint32_t tag, std::uint64_t params) {
  w.magic("VDAC");
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(widths.size()));
  for (std::size_t width : widths) w.u32(static_cast<std::uint32_t>(width));
  w.u32(tag);
  w.u64(params);
}

}  // namespace

void save_codec(const NeuralCodec& codec, const std::filesystem::path& path, const AdamState* adam) {
  const Eigen::VectorXd& p = codec.params();
  if (adam) {
    require(adam->m.size() == p.size() && adam->v.size() == p.size(), ErrorCode::ShapeMismatch,
            "save_codec: Adam moments do not match the parameter count");
  }
  io::Writer w(path);
  write_header(w, codec.widths(), static_cast<std::uint32_t>(codec.activation()), static_cast<std::uint64_t>(p.size()));
  w.f64s({p.data(), static_cast<std::size_t>(p.size())});
  w.u8(adam ? 1 : 0);
  if (adam) {
    w.u64(adam->t);
    w.f64s({adam->m.data(), static_cast<std::size_t>(adam->m.size())});
    w.f64s({adam->v.data(), static_cast<std::size_t>(adam->v.size())});
  }
  w.finish();
}

void save_codec(const LinearCodec& codec, const std::filesystem::path& path) {
  const Eigen::MatrixXd& q = codec.basis();
  io::Writer w(path);
  write_header(w, {codec.input_dim(), codec.latent_dim()}, kTagLinear, static_cast<std::uint64_t>(q.size()));
  w.f64s({q.data(), static_cast<std::size_t>(q.size())});
  w.u8(0);
  w.finish();
}

CodecCheckpoint load_codec(const std::filesystem::path& path) {
  io::Reader r(path);
  r.expect_magic("VDAC");
  const std::uint32_t version = r.u32();
  require(version == kVersion, ErrorCode::UnsupportedVersion, "VDAC: unsupported version " + std::to_string(version));
  const std::uint32_t depth = r.u32();
  require(depth >= 1 && depth <= 64, ErrorCode::InvalidArgument, "VDAC: implausible width count");
  std::vector<std::size_t> widths(depth);
  for (auto& width : widths) {
    width = r.u32();
    require(width > 0, ErrorCode::InvalidArgument, "VDAC: zero layer width");
  }
  const std::uint32_t tag = r.u32();
  const std::uint64_t count = r.u64();
  r.require_doubles(count, "VDAC parameters");

  CodecCheckpoint out;
  if (tag == kTagLinear) {
    require(depth == 2 && widths[1] <= widths[0], ErrorCode::InvalidArgument, "VDAC: malformed linear codec");
    require(count == io::checked_product({widths[0], widths[1]}), ErrorCode::InvalidArgument,
            "VDAC: linear codec parameter count mismatch");
    Eigen::MatrixXd q(static_cast<Eigen::Index>(widths[0]), static_cast<Eigen::Index>(widths[1]));
    r.f64s({q.data(), static_cast<std::size_t>(q.size())});
    out.codec = std::make_unique<LinearCodec>(std::move(q));
    require(r.u8() == 0, ErrorCode::InvalidArgument, "VDAC: linear codec cannot carry optimizer state");
    return out;
  }
  require(tag == 0 || tag == 1, ErrorCode::InvalidArgument, "VDAC: unknown activation tag " + std::to_string(tag));
  auto codec = std::make_unique<NeuralCodec>(widths, static_cast<Activation>(tag));
  require(count == codec->param_count(), ErrorCode::InvalidArgument,
          "VDAC: parameter count does not match the architecture");
  Eigen::VectorXd p(static_cast<Eigen::Index>(count));
  r.f64s({p.data(), static_cast<std::size_t>(count)});
  codec->set_params(p);
  const std::uint8_t has_adam = r.u8();
  require(has_adam <= 1, ErrorCode::InvalidArgument, "VDAC: bad optimizer flag");
  if (has_adam) {
    AdamState adam;
    adam.t = r.u64();
    r.require_doubles(io::checked_product({count, 2}), "VDAC optimizer state");
    adam.m.resize(static_cast<Eigen::Index>(count));
    adam.v.resize(static_cast<Eigen::Index>(count));
    r.f64s({adam.m.data(), static_cast<std::size_t>(count)});
    r.f64s({adam.v.data(), static_cast<std::size_t>(count)});
    out.adam = std::move(adam);
  }
  out.codec = std::move(codec);
  return out;
}

}  // namespace vda
