#pragma once

#include <stdexcept>
#include <string>

namespace paratrunc {

enum class ErrorCode {
  invalid_argument = 1,
  numeric_failure = 2,
  io = 3,
};

/// Exception type thrown by the core. The code is what the C API reports.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(const std::string& what) {
  throw Error(ErrorCode::invalid_argument, what);
}

[[noreturn]] inline void fail_numeric(const std::string& what) {
  throw Error(ErrorCode::numeric_failure, what);
}

}  // namespace paratrunc
