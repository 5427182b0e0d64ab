#pragma once

#include <stdexcept>
#include <string>

namespace outpaint {

enum class ErrorKind {
  kArgument,  // bad shapes, out-of-range values
  kConfig,    // invalid configuration or dataset layout
  kIo,        // filesystem failures
  kFormat,    // malformed or incompatible checkpoint / manifest
  kDecode,    // image decode failure
  kNumeric,   // non-finite loss during training
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::kArgument, message);
}

}  // namespace outpaint
