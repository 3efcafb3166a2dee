#include "patchepi/error.hpp"

namespace patchepi {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::NoPositiveSolution: return "NoPositiveSolution";
    case ErrorCode::WrongEquilibrium: return "WrongEquilibrium";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::ThresholdUndefined: return "ThresholdUndefined";
    case ErrorCode::ThresholdOverflow: return "ThresholdOverflow";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::MassDrift: return "MassDrift";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidModel:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::HypothesisViolated:
    case ErrorCode::Parse:
      return 2;
    case ErrorCode::Io:
      return 4;
    default:
      return 3;
  }
}

}  // namespace patchepi
