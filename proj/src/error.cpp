#include "ptcad/error.hpp"

namespace ptcad {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyWord: return "EmptyWord";
    case ErrorCode::kMarkBeforeLetter: return "MarkBeforeLetter";
    case ErrorCode::kUnsupportedMarkCluster: return "UnsupportedMarkCluster";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kInvalidEncoding: return "InvalidEncoding";
    case ErrorCode::kUnsplittableSegment: return "UnsplittableSegment";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kMissingTag: return "MissingTag";
    case ErrorCode::kAlignmentFailure: return "AlignmentFailure";
    case ErrorCode::kPreconditionViolation: return "PreconditionViolation";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kEmptySentence: return "EmptySentence";
    case ErrorCode::kTooLong: return "TooLong";
    case ErrorCode::kSpanMismatch: return "SpanMismatch";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kSequenceTooLong: return "SequenceTooLong";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kGradientMismatch: return "GradientMismatch";
    case ErrorCode::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kUnsplittableWord: return "UnsplittableWord";
    case ErrorCode::kInvalidStep: return "InvalidStep";
    case ErrorCode::kInvalidStrategy: return "InvalidStrategy";
    case ErrorCode::kBaseTextMismatch: return "BaseTextMismatch";
    case ErrorCode::kInvalidEdges: return "InvalidEdges";
    case ErrorCode::kUnknownKey: return "UnknownKey";
    case ErrorCode::kInvalidValue: return "InvalidValue";
  }
  return "Unknown";
}

}  // namespace ptcad
