#pragma once
#include <stdexcept>
#include <string>
#include <string_view>

namespace lyaplab {

enum class ErrorCode {
  EigenNotSimple,
  EigenComplex,
  SingularRestriction,
  RankMismatch,
  InverseIterationDiverged,
  TangentMismatch,
  NoDomination,
  PowerIterationStalled,
  NormalizationSingular,
  InvarianceResidualHigh,
  NeedsSmoothOmega,
  NeedsSmoothV,
  SeriesTooLong,
  BudgetExceeded,
  TooFewBlocks,
  SpecInvalid,
  InvalidArgument,
  IoError,
};

std::string_view error_name(ErrorCode code);

// Spec/configuration problems map to exit code 2, everything numeric to 1.
bool is_spec_error(ErrorCode code);

class LabError : public std::runtime_error {
 public:
  LabError(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace lyaplab
