#pragma once

#include <optional>
#include <string>

#include "clinfom/score_table.hpp"

namespace clinfom {

// Object-to-subject score linkage. nth_largest indexes the descending order
// statistics (permutation invariant); nth_positional indexes stable input
// order. Quantile uses nearest-rank so the output is always an actual object
// score.
struct AggregationRule {
  enum class Kind { nth_largest, nth_positional, max, mean, quantile };
  Kind kind = Kind::nth_largest;
  std::optional<int> n;     // nth_* (1-based)
  std::optional<double> q;  // quantile, in [0,1]
};

// Parses "nth_largest:3", "nth_positional:3", "max", "mean", "quantile:0.75".
AggregationRule parse_aggregation_rule(const std::string& text);
std::string aggregation_rule_to_string(const AggregationRule& rule);

// Collapses an object-level table to one record per subject, preserving
// first-appearance subject order. label, fold, epoch and covariates carry
// over; fold/epoch must be constant within each subject.
ScoreTable aggregate_subjects(const ScoreTable& table, const AggregationRule& rule);

}  // namespace clinfom
