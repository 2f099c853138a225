#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ptcad {

enum class ErrorCode {
  // arabic
  kEmptyWord,
  kMarkBeforeLetter,
  kUnsupportedMarkCluster,
  // corpus / io
  kIoFailure,
  kInvalidEncoding,
  kUnsplittableSegment,
  // taskgen
  kEmptyInput,
  kMissingTag,
  kAlignmentFailure,
  kPreconditionViolation,
  // encoding
  kEmptyCorpus,
  kEmptySentence,
  kTooLong,
  kSpanMismatch,
  // model
  kInvalidConfig,
  kSequenceTooLong,
  kShapeMismatch,
  kDivergenceDetected,
  kGradientMismatch,
  kCorruptCheckpoint,
  kVersionMismatch,
  // inference
  kUnsplittableWord,
  kInvalidStep,
  kInvalidStrategy,
  // metrics
  kBaseTextMismatch,
  kInvalidEdges,
  // configuration
  kUnknownKey,
  kInvalidValue,
};

std::string_view error_code_name(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ptcad
