#include "recast/error.hpp"

namespace recast {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInputTooLarge: return "InputTooLarge";
    case ErrorCode::kInvalidUtf8: return "InvalidUtf8";
    case ErrorCode::kSpanOutOfBounds: return "SpanOutOfBounds";
    case ErrorCode::kSpanTooLong: return "SpanTooLong";
    case ErrorCode::kEmptyDistribution: return "EmptyDistribution";
    case ErrorCode::kUndefinedCorrelation: return "UndefinedCorrelation";
    case ErrorCode::kEmptySample: return "EmptySample";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kParse: return "Parse";
  }
  return "Unknown";
}

}  // namespace recast
