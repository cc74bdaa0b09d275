#include "clinfom/error.hpp"

namespace clinfom {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::malformed_input: return "MalformedInput";
    case Errc::bad_label: return "BadLabel";
    case Errc::non_finite_score: return "NonFiniteScore";
    case Errc::inconsistent_subject_label: return "InconsistentSubjectLabel";
    case Errc::duplicate_row: return "DuplicateRow";
    case Errc::missing_object_id: return "MissingObjectId";
    case Errc::io_error: return "IoError";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::degenerate_classes: return "DegenerateClasses";
    case Errc::bad_sliver_spec: return "BadSliverSpec";
    case Errc::too_few_samples: return "TooFewSamples";
    case Errc::zero_spread: return "ZeroSpread";
    case Errc::score_out_of_range: return "ScoreOutOfRange";
    case Errc::missing_folds: return "MissingFolds";
    case Errc::too_few_controls: return "TooFewControls";
    case Errc::unknown_fold: return "UnknownFold";
    case Errc::too_few_objects: return "TooFewObjects";
    case Errc::mixed_fold_within_subject: return "MixedFoldWithinSubject";
    case Errc::mixed_epoch_within_subject: return "MixedEpochWithinSubject";
    case Errc::bad_rule: return "BadRule";
    case Errc::degenerate_epoch: return "DegenerateEpoch";
    case Errc::missing_epoch_column: return "MissingEpochColumn";
    case Errc::fom_not_in_series: return "FomNotInSeries";
    case Errc::unknown_covariate: return "UnknownCovariate";
    case Errc::bad_grid: return "BadGrid";
    case Errc::empty_space: return "EmptySpace";
    case Errc::bad_param: return "BadParam";
    case Errc::bad_config: return "BadConfig";
    case Errc::internal: return "Internal";
  }
  return "Unknown";
}

ErrCategory errc_category(Errc code) {
  switch (code) {
    case Errc::malformed_input:
    case Errc::bad_label:
    case Errc::non_finite_score:
    case Errc::inconsistent_subject_label:
    case Errc::duplicate_row:
    case Errc::missing_object_id:
    case Errc::io_error:
      return ErrCategory::input;
    case Errc::internal:
      return ErrCategory::internal;
    default:
      return ErrCategory::precondition;
  }
}

}  // namespace clinfom
