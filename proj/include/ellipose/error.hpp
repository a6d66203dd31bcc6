#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ellipose {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateConic,
  kDegenerateProjection,
  kInvalidSampling,
  kEmptyIntersection,
  kNonFiniteCost,
  kCollinearPoints,
  kNoRealSolution,
  kInsufficientObjects,
  kNoValidPose,
  kMissingSigma,
  kPlacementFailure,
  kFrameMismatch,
  kParseError,
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateConic: return "DegenerateConic";
    case ErrorCode::kDegenerateProjection: return "DegenerateProjection";
    case ErrorCode::kInvalidSampling: return "InvalidSampling";
    case ErrorCode::kEmptyIntersection: return "EmptyIntersection";
    case ErrorCode::kNonFiniteCost: return "NonFiniteCost";
    case ErrorCode::kCollinearPoints: return "CollinearPoints";
    case ErrorCode::kNoRealSolution: return "NoRealSolution";
    case ErrorCode::kInsufficientObjects: return "InsufficientObjects";
    case ErrorCode::kNoValidPose: return "NoValidPose";
    case ErrorCode::kMissingSigma: return "MissingSigma";
    case ErrorCode::kPlacementFailure: return "PlacementFailure";
    case ErrorCode::kFrameMismatch: return "FrameMismatch";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ellipose
