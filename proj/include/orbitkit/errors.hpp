#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace orbitkit {

enum class ErrorKind {
  OutOfDomain,
  OrderTooHigh,
  DomainTooSmall,
  GuardViolated,
  LeftDomain,
  StepUnderflow,
  TailNotSummable,
  WordNotIntegrable,
  InvalidArgument,
  ParseError,
  UnknownBuiltin,
  DimensionMismatch,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::OrderTooHigh: return "OrderTooHigh";
    case ErrorKind::DomainTooSmall: return "DomainTooSmall";
    case ErrorKind::GuardViolated: return "GuardViolated";
    case ErrorKind::LeftDomain: return "LeftDomain";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::TailNotSummable: return "TailNotSummable";
    case ErrorKind::WordNotIntegrable: return "WordNotIntegrable";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownBuiltin: return "UnknownBuiltin";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind so the
/// CLI can capture it into a report instead of aborting.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace orbitkit
