#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace afibkit {

// Every domain failure carries one of these codes; the CLI prints the name.
enum class ErrorCode {
  kMalformedHeader,
  kUnsupportedFormat,
  kTruncatedSignal,
  kChecksumMismatch,
  kMalformedAnnotation,
  kChannelOutOfRange,
  kDegenerateSignal,
  kEmptyDataset,
  kSingleClass,
  kSignalTooShort,
  kTooFewPeaks,
  kNonPowerOfTwo,
  kSegmentTooShort,
  kShapeMismatch,
  kDegenerateBatch,
  kStaleForward,
  kNonFinite,
  kInputTooShort,
  kInputTooSmall,
  kLengthMismatch,
  kEmptyInput,
  kInvalidConfig,
  kMalformedContainer,
  kIoError,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace afibkit
