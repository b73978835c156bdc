#include "vda/error.hpp"

namespace vda {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::ShapeMismatch: return "shape_mismatch";
    case ErrorCode::NonFinite: return "non_finite";
    case ErrorCode::BadMagic: return "bad_magic";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::DimensionOverflow: return "dimension_overflow";
    case ErrorCode::UnsupportedVersion: return "unsupported_version";
    case ErrorCode::Io: return "io";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::Diverged: return "diverged";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace vda
