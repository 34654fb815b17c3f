#include "warp/error.hpp"

namespace warp {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kMalformedHeader: return "malformed header";
    case ErrorCode::kBadDimension: return "bad dimension";
    case ErrorCode::kNonMonotoneOffsets: return "non-monotone offsets";
    case ErrorCode::kEmptyDocument: return "empty document";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kNormViolation: return "norm violation";
    case ErrorCode::kQueryLength: return "query length";
    case ErrorCode::kMalformedQrels: return "malformed qrels";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kSizeMismatch: return "size mismatch";
    case ErrorCode::kCorruptOffsets: return "corrupted offsets";
    case ErrorCode::kOutOfRange: return "out of range";
    case ErrorCode::kDegenerateSample: return "degenerate sample";
    case ErrorCode::kNoJudgedQueries: return "no judged queries";
    case ErrorCode::kMalformedRun: return "malformed run file";
    case ErrorCode::kInternal: return "internal error";
  }
  return "unknown";
}

}  // namespace warp
