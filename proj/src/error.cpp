#include "neuroscan/error.hpp"

namespace neuroscan {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::decode_error: return "decode_error";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::unsupported_format: return "unsupported_format";
    case ErrorCode::dataset_layout: return "dataset_layout_error";
    case ErrorCode::insufficient_neighbors: return "insufficient_neighbors_error";
    case ErrorCode::shape_error: return "shape_error";
    case ErrorCode::state_error: return "state_error";
    case ErrorCode::checkpoint_format: return "checkpoint_format_error";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::lock_error: return "lock_error";
    case ErrorCode::undefined_curve: return "undefined_curve_error";
  }
  return "error";
}

}  // namespace neuroscan
