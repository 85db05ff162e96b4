#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tgopt {

enum class ErrorCode {
  // data
  EmptyFile,
  MissingColumn,
  NonNumericCell,
  InconsistentDimensions,
  TaskTooSmall,
  InvalidTaskSet,
  TooFewSamples,
  InvalidSpec,
  // numerics
  ShapeMismatch,
  DomainError,
  NumericalDivergence,
  DegenerateLabels,
  DegenerateFit,
  MissingCheckpoint,
  ZeroVariance,
  ZeroStlSum,
  // grouping
  GroupTooSmall,
  NonBinaryForHamming,
  MissingPairGain,
  MissingFeature,
  MissingPrerequisite,
  TooFewRecords,
  OutOfRange,
  DegenerateVectors,
  InvalidPartition,
  // harness
  ConfigInvalid,
  MissingPrerequisiteStage,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tgopt
