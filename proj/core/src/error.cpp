#include "tgopt/error.hpp"

namespace tgopt {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::InconsistentDimensions: return "InconsistentDimensions";
    case ErrorCode::TaskTooSmall: return "TaskTooSmall";
    case ErrorCode::InvalidTaskSet: return "InvalidTaskSet";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NumericalDivergence: return "NumericalDivergence";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::MissingCheckpoint: return "MissingCheckpoint";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::ZeroStlSum: return "ZeroStlSum";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::NonBinaryForHamming: return "NonBinaryForHamming";
    case ErrorCode::MissingPairGain: return "MissingPairGain";
    case ErrorCode::MissingFeature: return "MissingFeature";
    case ErrorCode::MissingPrerequisite: return "MissingPrerequisite";
    case ErrorCode::TooFewRecords: return "TooFewRecords";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DegenerateVectors: return "DegenerateVectors";
    case ErrorCode::InvalidPartition: return "InvalidPartition";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::MissingPrerequisiteStage: return "MissingPrerequisiteStage";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace tgopt
