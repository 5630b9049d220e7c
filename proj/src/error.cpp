#include "stablegrad/error.hpp"

namespace stablegrad {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BoundsViolated: return "BoundsViolated";
    case ErrorCode::OverlappingBumps: return "OverlappingBumps";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::AccuracyNotReached: return "AccuracyNotReached";
    case ErrorCode::DivergentIntensity: return "DivergentIntensity";
    case ErrorCode::GridOverflow: return "GridOverflow";
    case ErrorCode::TruncationInsufficient: return "TruncationInsufficient";
    case ErrorCode::NonPositiveDelta: return "NonPositiveDelta";
    case ErrorCode::TailBoundNotObserved: return "TailBoundNotObserved";
    case ErrorCode::OutOfDeskRange: return "OutOfDeskRange";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace stablegrad
