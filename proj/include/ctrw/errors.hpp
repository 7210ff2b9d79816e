#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctrw {

// Error categories map onto CLI exit codes.
enum class ErrorCategory { config = 2, realizability = 3, numerical = 4, budget = 5 };

enum class ErrorKind {
  // config
  UnknownProblem,
  InvalidParams,
  EmptyWindow,
  ParseError,
  ValidationError,
  DecompositionMismatch,
  // realizability
  InadmissibleDiffusion,
  DomainViolation,
  RealizabilityViolation,
  NotDiagonallyDominant,
  // numerical
  SingularDiffusion,
  QuadratureFailure,
  Overlap,
  FactorizationFailure,
  AbsorbedState,
  ZeroRate,
  NotIrreducible,
  NoConvergence,
  UnstableDrift,
  InsufficientPaths,
  // budget
  StepBudgetExceeded,
};

std::string_view kind_name(ErrorKind kind);
ErrorCategory category_of(ErrorKind kind);
std::string_view category_name(ErrorCategory cat);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const { return kind_; }
  ErrorCategory category() const { return category_of(kind_); }
  int exit_code() const { return static_cast<int>(category()); }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& what);

}  // namespace ctrw
