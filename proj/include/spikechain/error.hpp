#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spikechain {

enum class ErrorCode {
  InvalidArgument,
  ExponentOutOfRange,
  ShootingBracketFailure,
  ToleranceNotReached,
  QuadratureNonconvergent,
  OutOfTabulatedRange,
  NonpositiveArgument,
  OutOfDomain,
  KernelRangeExceeded,
  TrajectoryEscape,
  SignConventionViolation,
  BracketFailure,
  NoConvergence,
  StepOutOfDomain,
  StepSizeUnderflow,
  ConfigParseError,
  ArtifactMissing,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ExponentOutOfRange: return "ExponentOutOfRange";
    case ErrorCode::ShootingBracketFailure: return "ShootingBracketFailure";
    case ErrorCode::ToleranceNotReached: return "ToleranceNotReached";
    case ErrorCode::QuadratureNonconvergent: return "QuadratureNonconvergent";
    case ErrorCode::OutOfTabulatedRange: return "OutOfTabulatedRange";
    case ErrorCode::NonpositiveArgument: return "NonpositiveArgument";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::KernelRangeExceeded: return "KernelRangeExceeded";
    case ErrorCode::TrajectoryEscape: return "TrajectoryEscape";
    case ErrorCode::SignConventionViolation: return "SignConventionViolation";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::StepOutOfDomain: return "StepOutOfDomain";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::ConfigParseError: return "ConfigParseError";
    case ErrorCode::ArtifactMissing: return "ArtifactMissing";
  }
  return "Unknown";
}

/// Every failure in the pipeline is reported through this type. `module()`
/// names the stage that raised it so the driver can surface provenance.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& what)
      : std::runtime_error(std::string(module) + ": " + std::string(to_string(code)) + ": " + what),
        code_(code),
        module_(std::move(module)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace spikechain
