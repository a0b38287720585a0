#include "rhfill/errors.hpp"

namespace rhfill {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::unsupported_kind: return "unsupported-kind";
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::budget_exceeded: return "budget-exceeded";
    case ErrorCode::incompatible_genset: return "incompatible-genset";
    case ErrorCode::kernel_not_in_peripheral: return "kernel-not-in-peripheral";
    case ErrorCode::non_normal: return "non-normal";
    case ErrorCode::disconnected_in_window: return "disconnected-in-window";
    case ErrorCode::window_too_shallow: return "window-too-shallow";
    case ErrorCode::window_too_small: return "window-too-small";
    case ErrorCode::no_preimage_edge_in_window: return "no-preimage-edge-in-window";
    case ErrorCode::gap_too_small: return "gap-too-small";
    case ErrorCode::type_mismatch: return "type-mismatch";
    case ErrorCode::malformed_label: return "malformed-label";
    case ErrorCode::empty_path: return "empty-path";
    case ErrorCode::peripheral_image_not_finite: return "peripheral-image-not-finite";
    case ErrorCode::divergence_screening_failed: return "divergence-screening-failed";
    case ErrorCode::schema_error: return "schema-error";
    case ErrorCode::no_tabular_data: return "no-tabular-data";
    case ErrorCode::task_failed: return "task-failed";
  }
  return "unknown-error";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::budget_exceeded: return 3;
    case ErrorCode::schema_error:
    case ErrorCode::unsupported_kind:
    case ErrorCode::invalid_parameter:
    case ErrorCode::malformed_label:
    case ErrorCode::type_mismatch:
      return 2;
    default: return 1;
  }
}

}  // namespace rhfill
