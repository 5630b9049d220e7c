#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stablegrad {

enum class ErrorCode {
  InvalidArgument,
  BoundsViolated,
  OverlappingBumps,
  QuadratureFailure,
  AccuracyNotReached,
  DivergentIntensity,
  GridOverflow,
  TruncationInsufficient,
  NonPositiveDelta,
  TailBoundNotObserved,
  OutOfDeskRange,
  ParseError,
  IoFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library error. Every failure mode named by an operation contract maps to
/// one ErrorCode; the message carries the diagnostic detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stablegrad
