#pragma once

#include <stdexcept>
#include <string>

namespace vda {

enum class ErrorCode {
  InvalidArgument,
  ShapeMismatch,
  NonFinite,
  BadMagic,
  Truncated,
  DimensionOverflow,
  UnsupportedVersion,
  Io,
  Unsupported,
  Diverged,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI) can tell format errors apart from numeric ones.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace vda
