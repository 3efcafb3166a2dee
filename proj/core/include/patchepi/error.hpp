#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace patchepi {

enum class ErrorCode {
  InvalidModel,
  DimensionMismatch,
  HypothesisViolated,
  NoPositiveSolution,
  WrongEquilibrium,
  ConvergenceFailure,
  ThresholdUndefined,
  ThresholdOverflow,
  StepUnderflow,
  MassDrift,
  Parse,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Process exit status for a failure of this kind: 2 validation, 3 solver, 4 I/O.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace patchepi
