#pragma once

#include <map>
#include <optional>
#include <string>

#include "clinfom/score_table.hpp"

namespace clinfom {

// Control-class spread parameters fitted per fold.
struct FoldParams {
  int fold;
  double median;
  double right_std;
  double left_std;
  int n_controls;
};

// Target scale all folds are mapped onto. One std is applied to both sides;
// left_std is carried for completeness but unused by the default mapping.
struct CanonicalScale {
  double median = 0.3;
  double std = 0.2;
  std::optional<double> left_std;
};

struct AlignmentModel {
  CanonicalScale canonical;
  std::map<int, FoldParams> per_fold;
};

// Fits per-fold medians and two-sided spreads over control (label 0) scores
// only; positive records never influence the parameters.
AlignmentModel fit_alignment(const ScoreTable& table, const CanonicalScale& canonical = {});

// Maps score s in fold k to  m_t + std * (s - m_k) / sigma_{r or l, k},
// choosing the side by the sign of (s - m_k). Scores at the fold median map
// to the canonical median. All non-score fields are preserved.
ScoreTable apply_alignment(const ScoreTable& table, const AlignmentModel& model,
                           bool clip = false);

double apply_alignment_to_score(double score, const FoldParams& fold,
                                const CanonicalScale& canonical);

std::string alignment_model_to_json(const AlignmentModel& model);
AlignmentModel alignment_model_from_json(const std::string& text);

}  // namespace clinfom
