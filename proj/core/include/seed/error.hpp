#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seed {

enum class ErrorCode {
  InvalidArgument,
  ZeroVector,
  DimMismatch,
  DegenerateMatrix,
  ShapeMismatch,
  TrainModeSingleSample,
  EmptyBatch,
  EmptyPairSet,
  EmptyMemory,
  MissingClass,
  EmptyGradientSet,
  DuplicateTask,
  NonMonotonicClock,
  NoPositives,
  SeriesTooShort,
  DegenerateBatch,
  MalformedRow,
  NonNumericFeature,
  MissingColumn,
  EmptyTask,
  InvalidConfig,
  ConfigParse,
  DatasetMissing,
  MissingMetrics,
  IoError,
  CorruptCheckpoint,
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

}  // namespace seed
