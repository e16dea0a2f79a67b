#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace enarkit {

enum class ErrorCode {
  InvalidArgument,
  IsolatedNode,
  InvalidProbability,
  IsolationRetriesExceeded,
  EigConvergenceFailure,
  ShapeMismatch,
  NotStationary,
  LyapunovNonconvergence,
  CholeskyFailure,
  DimensionMismatch,
  RankDeficient,
  ZeroDenominator,
  EmptyGroup,
  ParseError,
  IoError,
};

std::string_view error_code_name(ErrorCode code);

// Data errors come from malformed input; numerical errors from the solvers.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace enarkit
