#pragma once

#include <optional>
#include <span>
#include <string>

namespace clinfom {

// Names one figure of merit. sliver_auc and sens_at_spec carry the target
// specificity; neg_val_ce is the negated balanced cross-entropy so that
// higher is better for every kind.
struct FomSpec {
  enum class Kind { neg_val_ce, bce, auc, sliver_auc, sens_at_spec, fisher };
  Kind kind = Kind::auc;
  std::optional<int> target_spec;

  bool operator==(const FomSpec&) const = default;
};

// Grammar: auc | sliver:<1-99> | sens_at_spec:<pct> | fisher | bce | neg_val_ce
FomSpec parse_fom_spec(const std::string& text);
std::string fom_spec_to_string(const FomSpec& spec);

// Evaluates the figure of merit on one slice of labels/scores.
double evaluate_fom(const FomSpec& spec, std::span<const int> labels,
                    std::span<const double> scores);

}  // namespace clinfom
