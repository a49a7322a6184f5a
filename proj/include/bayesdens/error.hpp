#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bayesdens {

enum class ErrorKind {
  // data errors
  TooFewPoints,
  DegenerateRange,
  NonFinite,
  NonPositiveForLog,
  OutOfRange,
  GridTooSmall,
  BadBasisSize,
  BadConfig,
  TooFewDraws,
  ParseError,
  // numeric failures
  EigFailure,
  RankDeficient,
  NonFiniteResult,
  SliceStuck,
  DivergenceLimit,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::DegenerateRange: return "DegenerateRange";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NonPositiveForLog: return "NonPositiveForLog";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::GridTooSmall: return "GridTooSmall";
    case ErrorKind::BadBasisSize: return "BadBasisSize";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::TooFewDraws: return "TooFewDraws";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::EigFailure: return "EigFailure";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NonFiniteResult: return "NonFiniteResult";
    case ErrorKind::SliceStuck: return "SliceStuck";
    case ErrorKind::DivergenceLimit: return "DivergenceLimit";
  }
  return "Unknown";
}

/// True for failures of the numerical machinery, as opposed to bad input.
constexpr bool is_numeric_failure(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EigFailure:
    case ErrorKind::RankDeficient:
    case ErrorKind::NonFiniteResult:
    case ErrorKind::SliceStuck:
    case ErrorKind::DivergenceLimit:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bayesdens
