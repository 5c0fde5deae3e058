#pragma once

#include <stdexcept>
#include <string>

namespace gridplace {

enum class ErrorCode {
  Parse,
  DuplicateBus,
  UnknownBus,
  InvalidBus,
  InvalidLine,
  Disconnected,
  Unbalanced,
  NoConvergence,
  UnstableBranch,
  SingularEliminationBlock,
  ZeroInertia,
  NotSymmetric,
  MissingZeroMode,
  MultipleZeroModes,
  OverdampedMode,
  DegenerateSpectrum,
  InvalidParameters,
  NoFeasiblePair,
  MissingThreshold,
  StepTooLarge,
  HorizonTooShort,
  DimensionMismatch,
  Io,
};

const char* to_string(ErrorCode code);

// True for failures of a numerical procedure (as opposed to bad input).
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gridplace
