#include "afibkit/error.hpp"

namespace afibkit {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kMalformedHeader: return "MalformedHeader";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kTruncatedSignal: return "TruncatedSignal";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kMalformedAnnotation: return "MalformedAnnotation";
    case ErrorCode::kChannelOutOfRange: return "ChannelOutOfRange";
    case ErrorCode::kDegenerateSignal: return "DegenerateSignal";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kSignalTooShort: return "SignalTooShort";
    case ErrorCode::kTooFewPeaks: return "TooFewPeaks";
    case ErrorCode::kNonPowerOfTwo: return "NonPowerOfTwo";
    case ErrorCode::kSegmentTooShort: return "SegmentTooShort";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDegenerateBatch: return "DegenerateBatch";
    case ErrorCode::kStaleForward: return "StaleForward";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kInputTooShort: return "InputTooShort";
    case ErrorCode::kInputTooSmall: return "InputTooSmall";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kMalformedContainer: return "MalformedContainer";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

}  // namespace afibkit
