#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rhfill {

enum class ErrorCode {
  unsupported_kind,
  invalid_parameter,
  budget_exceeded,
  incompatible_genset,
  kernel_not_in_peripheral,
  non_normal,
  disconnected_in_window,
  window_too_shallow,
  window_too_small,
  no_preimage_edge_in_window,
  gap_too_small,
  type_mismatch,
  malformed_label,
  empty_path,
  peripheral_image_not_finite,
  divergence_screening_failed,
  schema_error,
  no_tabular_data,
  task_failed,
};

std::string_view to_string(ErrorCode code);

// Process exit status for an error escaping to the CLI: 2 usage, 3 budget,
// 1 otherwise.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rhfill
