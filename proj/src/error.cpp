#include "fringebos/error.hpp"

namespace fringebos {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::HashMismatch: return "HashMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::EmptySpec: return "EmptySpec";
    case ErrorCode::ConstantField: return "ConstantField";
    case ErrorCode::BadSpeckleSize: return "BadSpeckleSize";
    case ErrorCode::BadTimes: return "BadTimes";
    case ErrorCode::BadArguments: return "BadArguments";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::DegenerateSize: return "DegenerateSize";
    case ErrorCode::DegenerateWindow: return "DegenerateWindow";
    case ErrorCode::NoCarrier: return "NoCarrier";
    case ErrorCode::NoPeak: return "NoPeak";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
  }
  return "Unknown";
}

ErrorClass classify(ErrorCode code) {
  switch (code) {
    case ErrorCode::RankDeficient:
    case ErrorCode::NonFinite:
    case ErrorCode::NoConvergence:
    case ErrorCode::DegenerateWindow:
      return ErrorClass::Numerical;
    default:
      return ErrorClass::Data;
  }
}

}  // namespace fringebos
