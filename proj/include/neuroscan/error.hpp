#pragma once

#include <stdexcept>
#include <string>

namespace neuroscan {

enum class ErrorCode {
  io_error,
  decode_error,
  invalid_argument,
  unsupported_format,
  dataset_layout,
  insufficient_neighbors,
  shape_error,
  state_error,
  checkpoint_format,
  config_error,
  lock_error,
  undefined_curve,
};

const char* error_code_name(ErrorCode code);

/// All library failures surface as Error; the CLI maps code_name() to its
/// single-line `error_code: message` diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }
  const char* code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace neuroscan
