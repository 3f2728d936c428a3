#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace isachar {

enum class ErrorCode {
  MalformedLabelFile,
  DuplicateIsa,
  EmptyCorpus,
  SampleTooShort,
  WindowTooShort,
  LagTooLarge,
  DimensionMismatch,
  SingleClassTrainingSet,
  CorruptModelFile,
  InsufficientGroups,
  EmptyLabelList,
  InvalidArgument,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLabelFile: return "MalformedLabelFile";
    case ErrorCode::DuplicateIsa: return "DuplicateIsa";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::SampleTooShort: return "SampleTooShort";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::LagTooLarge: return "LagTooLarge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingleClassTrainingSet: return "SingleClassTrainingSet";
    case ErrorCode::CorruptModelFile: return "CorruptModelFile";
    case ErrorCode::InsufficientGroups: return "InsufficientGroups";
    case ErrorCode::EmptyLabelList: return "EmptyLabelList";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library. `code()` identifies the condition,
/// `stage()` is set when the error crossed a pipeline stage or fold boundary.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  Error(ErrorCode code, const std::string& message, std::string stage)
      : std::runtime_error(std::string(to_string(code)) + " [" + stage + "]: " + message),
        code_(code),
        detail_(message),
        stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::string& stage() const noexcept { return stage_; }

  /// Same error with a context label attached (e.g. "endianness", "fold mipsel").
  /// Nested labels are joined with '/'.
  Error with_stage(const std::string& stage) const {
    return Error(code_, detail_, stage_.empty() ? stage : stage + "/" + stage_);
  }

 private:
  ErrorCode code_;
  std::string detail_;
  std::string stage_;
};

}  // namespace isachar
