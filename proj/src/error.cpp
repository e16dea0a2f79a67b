#include "enarkit/error.hpp"

namespace enarkit {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IsolatedNode: return "IsolatedNode";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::IsolationRetriesExceeded: return "IsolationRetriesExceeded";
    case ErrorCode::EigConvergenceFailure: return "EigConvergenceFailure";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotStationary: return "NotStationary";
    case ErrorCode::LyapunovNonconvergence: return "LyapunovNonconvergence";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::EigConvergenceFailure:
    case ErrorCode::NotStationary:
    case ErrorCode::LyapunovNonconvergence:
    case ErrorCode::CholeskyFailure:
    case ErrorCode::RankDeficient:
    case ErrorCode::ZeroDenominator:
    case ErrorCode::IsolationRetriesExceeded:
      return true;
    default:
      return false;
  }
}

}  // namespace enarkit
