#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace stokes {

// Failure classes thrown by the library.  Names are stable: they appear in
// CLI output and in JSON reports.
enum class ErrorCode {
  // expression / input handling
  SyntaxError,
  ArityError,
  DomainError,
  UnsupportedDimension,
  ArityMismatch,
  ConfigError,

  // geometry preconditions
  PoleProjection,
  MissingBoundary,
  WidthTooSmall,
  NearZeroValue,
  NotOnCircle,
  NotSphereValued,
  NotConstantOnV,

  // construction preconditions
  NotSeparated,
  MeridianConditionViolated,
  MollifyRangeViolated,
  PoleHit,
  StripTooWide,
  SeparationLost,
  DenominatorVanishes,
  HemispherePreservationViolated,

  // witness-level events (often the interesting outcome, not a bug)
  FixedPointEncountered,
  CoincidenceEncountered,
  NoRegularValueFound,
  NoPoleFound,
  UnreliableDegree,
  UnreliableWinding,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::ArityError: return "ArityError";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::PoleProjection: return "PoleProjection";
    case ErrorCode::MissingBoundary: return "MissingBoundary";
    case ErrorCode::WidthTooSmall: return "WidthTooSmall";
    case ErrorCode::NearZeroValue: return "NearZeroValue";
    case ErrorCode::NotOnCircle: return "NotOnCircle";
    case ErrorCode::NotSphereValued: return "NotSphereValued";
    case ErrorCode::NotConstantOnV: return "NotConstantOnV";
    case ErrorCode::NotSeparated: return "NotSeparated";
    case ErrorCode::MeridianConditionViolated: return "MeridianConditionViolated";
    case ErrorCode::MollifyRangeViolated: return "MollifyRangeViolated";
    case ErrorCode::PoleHit: return "PoleHit";
    case ErrorCode::StripTooWide: return "StripTooWide";
    case ErrorCode::SeparationLost: return "SeparationLost";
    case ErrorCode::DenominatorVanishes: return "DenominatorVanishes";
    case ErrorCode::HemispherePreservationViolated: return "HemispherePreservationViolated";
    case ErrorCode::FixedPointEncountered: return "FixedPointEncountered";
    case ErrorCode::CoincidenceEncountered: return "CoincidenceEncountered";
    case ErrorCode::NoRegularValueFound: return "NoRegularValueFound";
    case ErrorCode::NoPoleFound: return "NoPoleFound";
    case ErrorCode::UnreliableDegree: return "UnreliableDegree";
    case ErrorCode::UnreliableWinding: return "UnreliableWinding";
  }
  return "UnknownError";
}

// CLI process exit code for a failure class: 2 = malformed input,
// 3 = precondition or domain violation, 4 = audit verdict failure.
inline int exit_class(ErrorCode c) {
  switch (c) {
    case ErrorCode::SyntaxError:
    case ErrorCode::ArityError:
    case ErrorCode::ArityMismatch:
    case ErrorCode::ConfigError:
      return 2;
    case ErrorCode::UnreliableDegree:
    case ErrorCode::UnreliableWinding:
      return 4;
    default:
      return 3;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  Error(ErrorCode code, const std::string& msg, Eigen::VectorXd witness)
      : std::runtime_error(msg), code_(code), witness_(std::move(witness)) {}

  ErrorCode code() const { return code_; }
  const char* code_name() const { return error_code_name(code_); }
  const std::optional<Eigen::VectorXd>& witness() const { return witness_; }

 private:
  ErrorCode code_;
  std::optional<Eigen::VectorXd> witness_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg,
                              Eigen::VectorXd witness) {
  throw Error(code, msg, std::move(witness));
}

}  // namespace stokes
