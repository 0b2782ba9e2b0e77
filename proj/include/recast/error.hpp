#pragma once

#include <stdexcept>
#include <string>

namespace recast {

enum class ErrorCode {
  kInputTooLarge,
  kInvalidUtf8,
  kSpanOutOfBounds,
  kSpanTooLong,
  kEmptyDistribution,
  kUndefinedCorrelation,
  kEmptySample,
  kInvalidArgument,
  kIo,
  kParse,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace recast
