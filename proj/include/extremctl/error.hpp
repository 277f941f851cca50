#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace extremctl {

enum class ErrorCode {
  kZeroVector,
  kDegenerateNeutral,
  kDegenerateHeadset,
  kInvalidArgument,
  kNumericalBlowup,
  kBadAlpha,
  kInfeasible,
  kNoOscillation,
  kDimensionMismatch,
  kOutOfBounds,
  kConstantSignal,
  kInsufficientOverlap,
  kBadMagic,
  kBadVersion,
  kNonUnitQuaternion,
  kShortRead,
  kConfigInvalid,
  kInsufficientPoints,
  kIo,
  kParse,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries one of the codes above so
// callers (and the CLI's JSON error output) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace extremctl
