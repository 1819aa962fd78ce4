#include "linreplay/error.hpp"

namespace linreplay {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInconsistentSystem: return "InconsistentSystem";
    case ErrorCode::kInvalidDimension: return "InvalidDimension";
    case ErrorCode::kDegenerateWStar: return "DegenerateWStar";
    case ErrorCode::kInvalidEpsilon: return "InvalidEpsilon";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kRankDeficiency: return "RankDeficiency";
    case ErrorCode::kInvalidAngle: return "InvalidAngle";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kNotConverged: return "NotConverged";
    case ErrorCode::kNotEnoughSamples: return "NotEnoughSamples";
    case ErrorCode::kTooFewTasks: return "TooFewTasks";
    case ErrorCode::kInvalidParameters: return "InvalidParameters";
    case ErrorCode::kConstraintViolation: return "ConstraintViolation";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace linreplay
