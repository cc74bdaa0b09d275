#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clinfom/epoch_select.hpp"
#include "clinfom/fom_spec.hpp"
#include "clinfom/score_table.hpp"

namespace clinfom {

// Fixed display binning: 20 bins over [0,1]; out-of-range scores clamp into
// the end bins for display only.
struct HistogramTable {
  std::vector<double> bin_lo;       // 20 edges
  std::vector<double> bin_hi;
  std::vector<int> count_controls;  // label 0
  std::vector<int> count_positives; // label 1
};

struct ScatterRow {
  int epoch;
  std::string subject_id;
  int label;
  double covariate;  // NaN when no covariate requested
  double score;
};

struct EpochReport {
  int epoch;
  HistogramTable histogram;
  std::vector<ThresholdPoint> sens_spec;  // grid 0..1 step 0.01
  std::vector<ScatterRow> scores;         // per-record scatter data
  std::vector<ScatterRow> covariate_scatter;
};

struct FomSelection {
  FomSpec fom;
  SelectionPolicy policy;
  Selection selection;
};

struct ReportBundle {
  FomSeries series;
  std::vector<FomSelection> selections;
  std::vector<EpochReport> epoch_reports;  // one per selected epoch, ascending
  std::optional<std::string> covariate;
};

HistogramTable score_histogram(std::span<const int> labels, std::span<const double> scores);

// Evaluates the series, selects a stopping epoch per FoM, and assembles the
// per-epoch assessment tables for every selected epoch.
ReportBundle build_report(const ScoreTable& dump, const std::vector<FomSpec>& foms,
                          const SelectionPolicy& policy,
                          const std::optional<std::string>& covariate = std::nullopt,
                          int jobs = 1);

// Writes the bundle under dir:
//   fom_series.csv|.svg, selection.json,
//   epoch_<k>/histogram.csv|.svg, epoch_<k>/sens_spec.csv|.svg,
//   epoch_<k>/scores.csv, epoch_<k>/score_vs_<cov>.csv|.svg
// Returns the list of written paths (relative to dir).
std::vector<std::string> write_report(const ReportBundle& bundle, const std::string& dir);

std::string selection_json(const ReportBundle& bundle);

}  // namespace clinfom
