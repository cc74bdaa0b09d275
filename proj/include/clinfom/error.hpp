#pragma once

#include <stdexcept>
#include <string>

namespace clinfom {

// Stable error codes. Each code belongs to a category that maps 1:1 onto the
// CLI exit-code contract: input errors exit 2, domain precondition failures
// exit 3, everything else exits 4.
enum class Errc {
  // input / validation
  malformed_input,
  bad_label,
  non_finite_score,
  inconsistent_subject_label,
  duplicate_row,
  missing_object_id,
  io_error,
  // domain preconditions
  length_mismatch,
  degenerate_classes,
  bad_sliver_spec,
  too_few_samples,
  zero_spread,
  score_out_of_range,
  missing_folds,
  too_few_controls,
  unknown_fold,
  too_few_objects,
  mixed_fold_within_subject,
  mixed_epoch_within_subject,
  bad_rule,
  degenerate_epoch,
  missing_epoch_column,
  fom_not_in_series,
  unknown_covariate,
  bad_grid,
  empty_space,
  bad_param,
  bad_config,
  // internal
  internal,
};

enum class ErrCategory { input = 2, precondition = 3, internal = 4 };

const char* errc_name(Errc code);
ErrCategory errc_category(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        message_(std::move(message)) {}

  Errc code() const { return code_; }
  ErrCategory category() const { return errc_category(code_); }
  const std::string& detail() const { return message_; }

 private:
  Errc code_;
  std::string message_;
};

}  // namespace clinfom
