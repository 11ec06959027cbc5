#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rhl {

enum class ErrorCode {
  // usage / configuration
  InvalidArgument,
  ConfigError,
  // data
  IoError,
  InvalidValue,
  MissingColumn,
  NonChronologicalRows,
  EmptyDataset,
  DuplicateEventTime,
  OutOfWindow,
  UnknownCategoryLevel,
  NoEvents,
  UnitMismatch,
  GridOutsideBaseline,
  InsufficientClusters,
  BasisMismatch,
  ComponentOutOfRange,
  UnmatchedGroupLabel,
  DegenerateOutcome,
  // numerical
  NumericalOverflow,
  NotConverged,
  SingularInformation,
  EigenFailure,
  NegativeIntensity,
  SeparationDetected,
  RankDeficient,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Process exit code for an error: 1 usage/config, 2 data, 3 numerical.
int exit_code_for(ErrorCode code) noexcept;

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

}  // namespace rhl
