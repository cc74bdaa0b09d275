#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clinfom/fom_spec.hpp"
#include "clinfom/score_table.hpp"

namespace clinfom {

// Per-epoch values for a set of figures of merit, epochs ascending.
struct FomSeries {
  std::vector<int> epochs;
  std::vector<FomSpec> specs;
  std::vector<std::vector<double>> values;  // values[spec][epoch position]

  const std::vector<double>* find(const FomSpec& spec) const;
};

struct SelectionPolicy {
  double tie_tolerance = 0.005;  // relative to |max|
  enum class TieBreak { earliest, latest, most_stable };
  TieBreak tie_break = TieBreak::earliest;
};

struct Selection {
  int epoch;
  double value;
};

struct StabilityProfile {
  double threshold_star;
  double sens_slope;
  double spec_slope;
  double window;
};

struct ThresholdPoint {
  double threshold;
  double sensitivity;
  double specificity;
};

// Evaluates every requested FoM independently per epoch. Epochs are
// processed concurrently when jobs != 1; results are identical to serial.
FomSeries fom_series(const ScoreTable& dump, const std::vector<FomSpec>& foms, int jobs = 1);

// Picks the stopping epoch: candidates score within tie_tolerance of the
// best, ties broken per policy. most_stable needs the originating dump and
// ranks candidates by sens_slope + spec_slope at the target operating point.
Selection select_epoch(const FomSeries& series, const FomSpec& fom, const SelectionPolicy& policy,
                       const ScoreTable* dump = nullptr, double stability_spec_pct = 90.0,
                       double stability_window = 0.05);

// Sensitivity (score >= t) and specificity (score < t) per grid threshold.
std::vector<ThresholdPoint> threshold_curves(std::span<const int> labels,
                                             std::span<const double> scores,
                                             std::span<const double> grid);

// Central finite differences of the sens/spec curves around the
// sens-at-specificity threshold.
StabilityProfile stability_profile(std::span<const int> labels, std::span<const double> scores,
                                   double target_spec_pct, double window);

// Trailing moving maximum, window >= 1; used to smooth noisy FoM series.
std::vector<double> moving_max(std::span<const double> values, std::size_t window);

// Splits a per-epoch dump into (epoch, labels, scores) slices, ascending.
struct EpochSlice {
  int epoch;
  std::vector<int> labels;
  std::vector<double> scores;
  std::vector<std::size_t> record_indices;
};
std::vector<EpochSlice> split_by_epoch(const ScoreTable& dump);

}  // namespace clinfom
