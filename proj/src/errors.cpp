#include "gridplace/errors.hpp"

namespace gridplace {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::DuplicateBus: return "DuplicateBus";
    case ErrorCode::UnknownBus: return "UnknownBus";
    case ErrorCode::InvalidBus: return "InvalidBus";
    case ErrorCode::InvalidLine: return "InvalidLine";
    case ErrorCode::Disconnected: return "Disconnected";
    case ErrorCode::Unbalanced: return "UnbalancedInjections";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::UnstableBranch: return "UnstableBranch";
    case ErrorCode::SingularEliminationBlock: return "SingularEliminationBlock";
    case ErrorCode::ZeroInertia: return "ZeroInertia";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::MissingZeroMode: return "MissingZeroMode";
    case ErrorCode::MultipleZeroModes: return "MultipleZeroModes";
    case ErrorCode::OverdampedMode: return "OverdampedMode";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::InvalidParameters: return "InvalidParameters";
    case ErrorCode::NoFeasiblePair: return "NoFeasiblePair";
    case ErrorCode::MissingThreshold: return "MissingThreshold";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::HorizonTooShort: return "HorizonTooShort";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Io: return "IoError";
  }
  return "UnknownError";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoConvergence:
    case ErrorCode::UnstableBranch:
    case ErrorCode::SingularEliminationBlock:
    case ErrorCode::MissingZeroMode:
    case ErrorCode::OverdampedMode:
    case ErrorCode::DegenerateSpectrum:
    case ErrorCode::NoFeasiblePair:
    case ErrorCode::StepTooLarge:
    case ErrorCode::HorizonTooShort:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace gridplace
