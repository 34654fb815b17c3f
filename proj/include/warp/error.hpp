#pragma once

#include <stdexcept>
#include <string>

namespace warp {

/// Failure categories raised by the core. The C API maps these one-to-one
/// onto `warp_status` values, so the numbering is part of the ABI.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kIo = 2,
  kMalformedHeader = 3,
  kBadDimension = 4,
  kNonMonotoneOffsets = 5,
  kEmptyDocument = 6,
  kNonFinite = 7,
  kNormViolation = 8,
  kQueryLength = 9,
  kMalformedQrels = 10,
  kVersionMismatch = 11,
  kSizeMismatch = 12,
  kCorruptOffsets = 13,
  kOutOfRange = 14,
  kDegenerateSample = 15,
  kNoJudgedQueries = 16,
  kMalformedRun = 17,
  kInternal = 18,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace warp
