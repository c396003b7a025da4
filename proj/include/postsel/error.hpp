#ifndef POSTSEL_ERROR_HPP
#define POSTSEL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace postsel {

enum class ErrorKind {
  InvalidArgument,
  RankDeficient,
  InsufficientDf,
  NotNested,
  ZeroSse,
  NonPositiveSse,
  TooManyPredictors,
  AllSubsetsInfeasible,
  InvalidDf,
  InvalidProb,
  InvalidAlpha,
  DegenerateModel,
  LengthMismatch,
  DegenerateReplication,
  ConfigError,
  ParseError,
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::InsufficientDf: return "InsufficientDf";
    case ErrorKind::NotNested: return "NotNested";
    case ErrorKind::ZeroSse: return "ZeroSse";
    case ErrorKind::NonPositiveSse: return "NonPositiveSse";
    case ErrorKind::TooManyPredictors: return "TooManyPredictors";
    case ErrorKind::AllSubsetsInfeasible: return "AllSubsetsInfeasible";
    case ErrorKind::InvalidDf: return "InvalidDf";
    case ErrorKind::InvalidProb: return "InvalidProb";
    case ErrorKind::InvalidAlpha: return "InvalidAlpha";
    case ErrorKind::DegenerateModel: return "DegenerateModel";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DegenerateReplication: return "DegenerateReplication";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace postsel

#endif  // POSTSEL_ERROR_HPP
