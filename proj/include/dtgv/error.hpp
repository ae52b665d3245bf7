#pragma once

#include <stdexcept>
#include <string>

namespace dtgv {

enum class ErrorCode {
  InvalidGrid,
  ShapeMismatch,
  InvalidArgument,
  Domain,
  SingularFactor,
  NoDirection,
  Divergence,
  Calibration,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; `code()` tells callers which
/// contract fired.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dtgv
