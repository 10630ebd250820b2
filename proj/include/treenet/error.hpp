#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace treenet {

enum class ErrorCode {
  // data
  MissingLabelColumn,
  NonNumericFeature,
  EmptyDataset,
  NonFiniteValue,
  ClassTooSmall,
  // featurize
  BadMagic,
  UnsupportedMaxval,
  TruncatedPixelData,
  UnreadableImage,
  EmptyClass,
  // tree / forest / cascade
  EmptyCounts,
  DimensionMismatch,
  KFoldsTooLarge,
  DegenerateTraining,
  UnsupportedVersion,
  SchemaViolation,
  // metrics
  LengthMismatch,
  LabelOutOfRange,
  // shared
  InvalidArgument,
  InvalidConfig,
  IoError,
  OutputUnwritable,
};

/// Stable identifier for an error code, e.g. "KFoldsTooLarge".
std::string_view error_name(ErrorCode code) noexcept;

/// True for errors caused by the input data or files rather than by misuse
/// of the API; the CLI maps these to exit code 2.
bool is_data_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace treenet
