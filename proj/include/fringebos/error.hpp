#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fringebos {

enum class ErrorCode {
  // I/O and containers
  BadMagic,
  TruncatedPayload,
  UnsupportedDtype,
  IoFailure,
  ShapeMismatch,
  HashMismatch,
  // argument / data errors
  DimensionMismatch,
  DegenerateRange,
  InvariantViolation,
  EmptySpec,
  ConstantField,
  BadSpeckleSize,
  BadTimes,
  BadArguments,
  SizeMismatch,
  DegenerateSize,
  DegenerateWindow,
  NoCarrier,
  NoPeak,
  // numerical failures
  RankDeficient,
  NonFinite,
  NoConvergence,
};

std::string_view to_string(ErrorCode code);

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorClass { Data, Numerical };

ErrorClass classify(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fringebos
