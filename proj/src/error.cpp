#include "treenet/error.hpp"

namespace treenet {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingLabelColumn: return "MissingLabelColumn";
    case ErrorCode::NonNumericFeature: return "NonNumericFeature";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedMaxval: return "UnsupportedMaxval";
    case ErrorCode::TruncatedPixelData: return "TruncatedPixelData";
    case ErrorCode::UnreadableImage: return "UnreadableImage";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::EmptyCounts: return "EmptyCounts";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::KFoldsTooLarge: return "KFoldsTooLarge";
    case ErrorCode::DegenerateTraining: return "DegenerateTraining";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::OutputUnwritable: return "OutputUnwritable";
  }
  return "Unknown";
}

bool is_data_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidConfig:
      return false;
    default:
      return true;
  }
}

}  // namespace treenet
