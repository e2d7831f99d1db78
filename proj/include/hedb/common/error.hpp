#pragma once

#include <stdexcept>
#include <string>

namespace hedb {

enum class ErrorCode {
  kInvalidArgument,
  kSchemeMismatch,
  kModulusMismatch,
  kNotInvertible,
  kOutOfRange,
  kLayoutMismatch,
  kAuthFailure,
  kFormat,
  kDuplicate,
  kNotFound,
  kMissingKeys,
  kUnsupported,
  kProtocol,
  kIo,
  kCorrectness,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hedb
