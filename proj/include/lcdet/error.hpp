#pragma once

#include <stdexcept>
#include <string>

namespace lcdet {

// Coarse failure categories so the C API can map exceptions to stable
// status codes.
enum class ErrorCode {
  invalid_argument,
  config,
  io,
  numeric,
  state,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace lcdet
