#include "ctrw/errors.hpp"

namespace ctrw {

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownProblem: return "UnknownProblem";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::EmptyWindow: return "EmptyWindow";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::DecompositionMismatch: return "DecompositionMismatch";
    case ErrorKind::InadmissibleDiffusion: return "InadmissibleDiffusion";
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::RealizabilityViolation: return "RealizabilityViolation";
    case ErrorKind::NotDiagonallyDominant: return "NotDiagonallyDominant";
    case ErrorKind::SingularDiffusion: return "SingularDiffusion";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::Overlap: return "Overlap";
    case ErrorKind::FactorizationFailure: return "FactorizationFailure";
    case ErrorKind::AbsorbedState: return "AbsorbedState";
    case ErrorKind::ZeroRate: return "ZeroRate";
    case ErrorKind::NotIrreducible: return "NotIrreducible";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::UnstableDrift: return "UnstableDrift";
    case ErrorKind::InsufficientPaths: return "InsufficientPaths";
    case ErrorKind::StepBudgetExceeded: return "StepBudgetExceeded";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownProblem:
    case ErrorKind::InvalidParams:
    case ErrorKind::EmptyWindow:
    case ErrorKind::ParseError:
    case ErrorKind::ValidationError:
    case ErrorKind::DecompositionMismatch:
      return ErrorCategory::config;
    case ErrorKind::InadmissibleDiffusion:
    case ErrorKind::DomainViolation:
    case ErrorKind::RealizabilityViolation:
    case ErrorKind::NotDiagonallyDominant:
      return ErrorCategory::realizability;
    case ErrorKind::StepBudgetExceeded:
      return ErrorCategory::budget;
    default:
      return ErrorCategory::numerical;
  }
}

std::string_view category_name(ErrorCategory cat) {
  switch (cat) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::realizability: return "realizability";
    case ErrorCategory::numerical: return "numerical";
    case ErrorCategory::budget: return "budget";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}

void raise(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace ctrw
