#include "rhl/error.hpp"

namespace rhl {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonChronologicalRows: return "NonChronologicalRows";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DuplicateEventTime: return "DuplicateEventTime";
    case ErrorCode::OutOfWindow: return "OutOfWindow";
    case ErrorCode::UnknownCategoryLevel: return "UnknownCategoryLevel";
    case ErrorCode::NoEvents: return "NoEvents";
    case ErrorCode::UnitMismatch: return "UnitMismatch";
    case ErrorCode::GridOutsideBaseline: return "GridOutsideBaseline";
    case ErrorCode::InsufficientClusters: return "InsufficientClusters";
    case ErrorCode::BasisMismatch: return "BasisMismatch";
    case ErrorCode::ComponentOutOfRange: return "ComponentOutOfRange";
    case ErrorCode::UnmatchedGroupLabel: return "UnmatchedGroupLabel";
    case ErrorCode::DegenerateOutcome: return "DegenerateOutcome";
    case ErrorCode::NumericalOverflow: return "NumericalOverflow";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::SingularInformation: return "SingularInformation";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::NegativeIntensity: return "NegativeIntensity";
    case ErrorCode::SeparationDetected: return "SeparationDetected";
    case ErrorCode::RankDeficient: return "RankDeficient";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigError:
      return 1;
    case ErrorCode::NumericalOverflow:
    case ErrorCode::NotConverged:
    case ErrorCode::SingularInformation:
    case ErrorCode::EigenFailure:
    case ErrorCode::NegativeIntensity:
    case ErrorCode::SeparationDetected:
    case ErrorCode::RankDeficient:
      return 3;
    default:
      return 2;
  }
}

}  // namespace rhl
