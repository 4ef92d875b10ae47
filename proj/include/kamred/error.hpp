#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kamred {

/// Machine-readable failure categories. Each maps to a stable string used
/// in the CLI's error JSON.
enum class ErrorCode {
  UnsupportedDerivative,
  Validation,
  NoTurningPoint,
  DomainTooSmall,
  Truncation,
  Branch,
  Domain,
  UnsupportedIndex,
  UnderResolved,
  DegenerateFit,
  IterationLimit,
  DimensionMismatch,
  ResonantDivisor,
  Singular,
  Resonance,
  Divergence,
  OverExclusion,
  StepSize,
  ResonantPhase,
  GridMismatch,
  A3Violation,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedDerivative: return "unsupported-derivative";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::NoTurningPoint: return "no-turning-point";
    case ErrorCode::DomainTooSmall: return "domain-too-small";
    case ErrorCode::Truncation: return "truncation";
    case ErrorCode::Branch: return "branch";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::UnsupportedIndex: return "unsupported-index";
    case ErrorCode::UnderResolved: return "under-resolved";
    case ErrorCode::DegenerateFit: return "degenerate-fit";
    case ErrorCode::IterationLimit: return "iteration-limit";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::ResonantDivisor: return "resonant-divisor";
    case ErrorCode::Singular: return "singular";
    case ErrorCode::Resonance: return "resonance";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::OverExclusion: return "over-exclusion";
    case ErrorCode::StepSize: return "step-size";
    case ErrorCode::ResonantPhase: return "resonant-phase";
    case ErrorCode::GridMismatch: return "grid-mismatch";
    case ErrorCode::A3Violation: return "a3-violation";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace kamred
