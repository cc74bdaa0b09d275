#include "clinfom/epoch_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "clinfom/error.hpp"
#include "clinfom/metrics.hpp"
#include "clinfom/parallel.hpp"

namespace clinfom {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const std::vector<double>* FomSeries::find(const FomSpec& spec) const {
  for (std::size_t i = 0; i < specs.size(); ++i)
    if (specs[i] == spec) return &values[i];
  return nullptr;
}

std::vector<EpochSlice> split_by_epoch(const ScoreTable& dump) {
  if (!dump.has_epoch())
    throw Error(Errc::missing_epoch_column, "table has no epoch assignments");
  std::map<int, EpochSlice> slices;
  for (std::size_t i = 0; i < dump.records.size(); ++i) {
    const auto& rec = dump.records[i];
    if (!rec.epoch) throw Error(Errc::missing_epoch_column, "record without epoch");
    EpochSlice& slice = slices.try_emplace(*rec.epoch, EpochSlice{*rec.epoch, {}, {}, {}}).first->second;
    slice.labels.push_back(rec.label);
    slice.scores.push_back(rec.score);
    slice.record_indices.push_back(i);
  }
  std::vector<EpochSlice> out;
  out.reserve(slices.size());
  for (auto& [_, slice] : slices) out.push_back(std::move(slice));
  return out;
}

FomSeries fom_series(const ScoreTable& dump, const std::vector<FomSpec>& foms, int jobs) {
  const auto slices = split_by_epoch(dump);
  for (const auto& slice : slices) {
    const bool has_pos = std::find(slice.labels.begin(), slice.labels.end(), 1) != slice.labels.end();
    const bool has_neg = std::find(slice.labels.begin(), slice.labels.end(), 0) != slice.labels.end();
    if (!has_pos || !has_neg)
      throw Error(Errc::degenerate_epoch,
                  "epoch " + std::to_string(slice.epoch) + " is missing a class");
  }

  FomSeries series;
  series.specs = foms;
  series.epochs.reserve(slices.size());
  for (const auto& slice : slices) series.epochs.push_back(slice.epoch);
  series.values.assign(foms.size(), std::vector<double>(slices.size()));

  parallel_for(slices.size(), jobs, [&](std::size_t e) {
    for (std::size_t f = 0; f < foms.size(); ++f)
      series.values[f][e] = evaluate_fom(foms[f], slices[e].labels, slices[e].scores);
  });
  for (const auto& per_fom : series.values)
    for (double v : per_fom)
      if (!std::isfinite(v)) throw Error(Errc::internal, "non-finite fom value in series");
  return series;
}

Selection select_epoch(const FomSeries& series, const FomSpec& fom, const SelectionPolicy& policy,
                       const ScoreTable* dump, double stability_spec_pct,
                       double stability_window) {
  const std::vector<double>* values = series.find(fom);
  if (!values)
    throw Error(Errc::fom_not_in_series, fom_spec_to_string(fom) + " was not evaluated");
  if (values->empty()) throw Error(Errc::fom_not_in_series, "empty series");
  if (!(policy.tie_tolerance >= 0.0) || policy.tie_tolerance >= 1.0)
    throw Error(Errc::bad_param, "tie_tolerance must be in [0,1)");

  const double best = *std::max_element(values->begin(), values->end());
  // Relative to |best| so the candidate set is never empty for negative
  // series such as neg_val_ce.
  const double cutoff = best - policy.tie_tolerance * std::abs(best);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < values->size(); ++i)
    if ((*values)[i] >= cutoff) candidates.push_back(i);

  std::size_t chosen = candidates.front();
  switch (policy.tie_break) {
    case SelectionPolicy::TieBreak::earliest:
      break;
    case SelectionPolicy::TieBreak::latest:
      chosen = candidates.back();
      break;
    case SelectionPolicy::TieBreak::most_stable: {
      if (!dump)
        throw Error(Errc::bad_param, "most_stable tie break needs the per-epoch dump");
      const auto slices = split_by_epoch(*dump);
      double best_slope = kInf;
      for (std::size_t idx : candidates) {
        const auto it = std::find_if(slices.begin(), slices.end(), [&](const EpochSlice& s) {
          return s.epoch == series.epochs[idx];
        });
        if (it == slices.end())
          throw Error(Errc::degenerate_epoch,
                      "epoch " + std::to_string(series.epochs[idx]) + " missing from dump");
        const StabilityProfile profile =
            stability_profile(it->labels, it->scores, stability_spec_pct, stability_window);
        const double slope = profile.sens_slope + profile.spec_slope;
        if (slope < best_slope) {
          best_slope = slope;
          chosen = idx;
        }
      }
      break;
    }
  }
  return {series.epochs[chosen], (*values)[chosen]};
}

std::vector<ThresholdPoint> threshold_curves(std::span<const int> labels,
                                             std::span<const double> scores,
                                             std::span<const double> grid) {
  if (grid.empty()) throw Error(Errc::bad_grid, "threshold grid is empty");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] < grid[i + 1])) throw Error(Errc::bad_grid, "grid must be strictly ascending");
  if (labels.size() != scores.size())
    throw Error(Errc::length_mismatch, "labels vs scores");

  std::size_t n_pos = 0, n_neg = 0;
  for (int label : labels) (label == 1 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw Error(Errc::degenerate_classes, "need both classes for threshold curves");

  std::vector<ThresholdPoint> out;
  out.reserve(grid.size());
  for (double t : grid) {
    std::size_t tp = 0, tn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == 1 && scores[i] >= t) ++tp;
      if (labels[i] == 0 && scores[i] < t) ++tn;
    }
    out.push_back({t, static_cast<double>(tp) / n_pos, static_cast<double>(tn) / n_neg});
  }
  return out;
}

StabilityProfile stability_profile(std::span<const int> labels, std::span<const double> scores,
                                   double target_spec_pct, double window) {
  if (!(window > 0.0)) throw Error(Errc::bad_param, "window must be > 0");
  const SensAtSpec at = sens_at_spec(labels, scores, target_spec_pct);
  if (std::isinf(at.threshold)) {
    // Only the all-negative threshold qualifies; both curves are flat there.
    return {at.threshold, 0.0, 0.0, window};
  }
  // The qualifying threshold coincides with the lowest admitted score; the
  // deployable operating point is the middle of the open interval below it,
  // so slopes are probed there.
  double threshold_star = at.threshold;
  double predecessor = -std::numeric_limits<double>::infinity();
  for (double s : scores)
    if (s < at.threshold) predecessor = std::max(predecessor, s);
  if (std::isfinite(predecessor)) threshold_star = 0.5 * (predecessor + at.threshold);
  const double grid[2] = {threshold_star - window, threshold_star + window};
  const auto curves = threshold_curves(labels, scores, grid);
  const double sens_slope = std::abs(curves[1].sensitivity - curves[0].sensitivity) / (2 * window);
  const double spec_slope = std::abs(curves[1].specificity - curves[0].specificity) / (2 * window);
  return {threshold_star, sens_slope, spec_slope, window};
}

std::vector<double> moving_max(std::span<const double> values, std::size_t window) {
  if (window < 1) throw Error(Errc::bad_param, "window must be >= 1");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t lo = i + 1 >= window ? i + 1 - window : 0;
    out[i] = *std::max_element(values.begin() + lo, values.begin() + i + 1);
  }
  return out;
}

}  // namespace clinfom
