#pragma once

#include <stdexcept>
#include <string>

namespace kdqcm {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  ModeMismatch,
  BoundViolation,
  ConfigError,
  IoError,
  NumericFailure,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kdqcm
