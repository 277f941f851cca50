#include "extremctl/error.hpp"

namespace extremctl {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDegenerateNeutral: return "DegenerateNeutral";
    case ErrorCode::kDegenerateHeadset: return "DegenerateHeadset";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNumericalBlowup: return "NumericalBlowup";
    case ErrorCode::kBadAlpha: return "BadAlpha";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kNoOscillation: return "NoOscillation";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kConstantSignal: return "ConstantSignal";
    case ErrorCode::kInsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kBadVersion: return "BadVersion";
    case ErrorCode::kNonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::kShortRead: return "ShortRead";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kInsufficientPoints: return "InsufficientPoints";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kParse: return "Parse";
  }
  return "Unknown";
}

}  // namespace extremctl
