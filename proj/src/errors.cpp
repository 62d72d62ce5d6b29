#include "lyaplab/errors.hpp"

namespace lyaplab {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EigenNotSimple: return "EigenNotSimple";
    case ErrorCode::EigenComplex: return "EigenComplex";
    case ErrorCode::SingularRestriction: return "SingularRestriction";
    case ErrorCode::RankMismatch: return "RankMismatch";
    case ErrorCode::InverseIterationDiverged: return "InverseIterationDiverged";
    case ErrorCode::TangentMismatch: return "TangentMismatch";
    case ErrorCode::NoDomination: return "NoDomination";
    case ErrorCode::PowerIterationStalled: return "PowerIterationStalled";
    case ErrorCode::NormalizationSingular: return "NormalizationSingular";
    case ErrorCode::InvarianceResidualHigh: return "InvarianceResidualHigh";
    case ErrorCode::NeedsSmoothOmega: return "NeedsSmoothOmega";
    case ErrorCode::NeedsSmoothV: return "NeedsSmoothV";
    case ErrorCode::SeriesTooLong: return "SeriesTooLong";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::TooFewBlocks: return "TooFewBlocks";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_spec_error(ErrorCode code) {
  return code == ErrorCode::SpecInvalid || code == ErrorCode::InvalidArgument ||
         code == ErrorCode::IoError || code == ErrorCode::RankMismatch;
}

LabError::LabError(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw LabError(code, message); }

}  // namespace lyaplab
