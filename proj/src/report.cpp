#include "clinfom/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "clinfom/error.hpp"
#include "clinfom/svg.hpp"

namespace clinfom {

namespace {

constexpr int kHistogramBins = 20;
constexpr const char* kControlColor = "#2ca02c";   // green
constexpr const char* kPositiveColor = "#d62728";  // red

const char* tie_break_name(SelectionPolicy::TieBreak tb) {
  switch (tb) {
    case SelectionPolicy::TieBreak::earliest: return "earliest";
    case SelectionPolicy::TieBreak::latest: return "latest";
    case SelectionPolicy::TieBreak::most_stable: return "most_stable";
  }
  return "";
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid(101);
  for (int i = 0; i <= 100; ++i) grid[i] = i / 100.0;
  return grid;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << content;
}

std::string series_csv(const FomSeries& series) {
  std::string out = "epoch";
  for (const auto& spec : series.specs) out += "," + fom_spec_to_string(spec);
  out += "\n";
  for (std::size_t e = 0; e < series.epochs.size(); ++e) {
    out += std::to_string(series.epochs[e]);
    for (std::size_t f = 0; f < series.specs.size(); ++f)
      out += "," + format_double(series.values[f][e]);
    out += "\n";
  }
  return out;
}

std::string series_svg(const FomSeries& series) {
  const std::size_t n = series.specs.size();
  const double panel_w = 220, panel_h = 180, gap = 18, margin = 40;
  SvgCanvas canvas(margin + n * (panel_w + gap), panel_h + 70);
  for (std::size_t f = 0; f < n; ++f) {
    const auto& values = series.values[f];
    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    const double x0 = margin + f * (panel_w + gap);
    canvas.set_viewport(x0, 30, x0 + panel_w, 30 + panel_h,
                        series.epochs.front(), series.epochs.back(), lo, hi);
    canvas.frame();
    std::vector<double> xs(series.epochs.begin(), series.epochs.end());
    canvas.polyline(xs, values, "#1f77b4");
    const auto best = std::max_element(values.begin(), values.end());
    canvas.circle(xs[best - values.begin()], *best, 3.5, kPositiveColor);
    canvas.text(x0 + panel_w / 2, 20, fom_spec_to_string(series.specs[f]), 12, "middle");
  }
  return canvas.finish();
}

std::string histogram_csv(const HistogramTable& hist) {
  std::string out = "bin_lo,bin_hi,count_controls,count_positives\n";
  for (int b = 0; b < kHistogramBins; ++b) {
    out += format_double(hist.bin_lo[b]) + "," + format_double(hist.bin_hi[b]) + "," +
           std::to_string(hist.count_controls[b]) + "," + std::to_string(hist.count_positives[b]) +
           "\n";
  }
  return out;
}

std::string histogram_svg(const HistogramTable& hist, int epoch) {
  int max_count = 1;
  for (int b = 0; b < kHistogramBins; ++b)
    max_count = std::max({max_count, hist.count_controls[b], hist.count_positives[b]});
  SvgCanvas canvas(460, 260);
  canvas.set_viewport(50, 30, 430, 220, 0.0, 1.0, 0.0, max_count);
  canvas.frame();
  for (int b = 0; b < kHistogramBins; ++b) {
    const double center = (hist.bin_lo[b] + hist.bin_hi[b]) / 2;
    canvas.vbar(center - 0.009, hist.count_controls[b], 6.5, kControlColor, 0.85);
    canvas.vbar(center + 0.009, hist.count_positives[b], 6.5, kPositiveColor, 0.85);
  }
  canvas.title("score histogram, epoch " + std::to_string(epoch));
  return canvas.finish();
}

std::string sens_spec_csv(const std::vector<ThresholdPoint>& curves) {
  std::string out = "threshold,sensitivity,specificity\n";
  for (const auto& p : curves)
    out += format_double(p.threshold) + "," + format_double(p.sensitivity) + "," +
           format_double(p.specificity) + "\n";
  return out;
}

std::string sens_spec_svg(const std::vector<ThresholdPoint>& curves, int epoch) {
  SvgCanvas canvas(460, 260);
  canvas.set_viewport(50, 30, 430, 220, curves.front().threshold, curves.back().threshold, 0.0,
                      1.0);
  canvas.frame();
  std::vector<double> xs, sens, spec;
  for (const auto& p : curves) {
    xs.push_back(p.threshold);
    sens.push_back(p.sensitivity);
    spec.push_back(p.specificity);
  }
  canvas.polyline(xs, sens, kPositiveColor);
  canvas.polyline(xs, spec, kControlColor);
  canvas.title("sensitivity (red) / specificity (green), epoch " + std::to_string(epoch));
  return canvas.finish();
}

std::string scatter_csv(const std::vector<ScatterRow>& rows, bool with_cov) {
  std::string out = with_cov ? "epoch,subject_id,label,cov,score\n"
                             : "epoch,subject_id,label,score\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch) + "," + r.subject_id + "," + std::to_string(r.label) + ",";
    if (with_cov) out += format_double(r.covariate) + ",";
    out += format_double(r.score) + "\n";
  }
  return out;
}

std::string covariate_svg(const std::vector<ScatterRow>& rows, const std::string& cov,
                          int epoch) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : rows) {
    lo = std::min(lo, r.covariate);
    hi = std::max(hi, r.covariate);
  }
  SvgCanvas canvas(460, 260);
  canvas.set_viewport(50, 30, 430, 220, lo, hi, 0.0, 1.0);
  canvas.frame();
  for (const auto& r : rows)
    canvas.circle(r.covariate, std::clamp(r.score, 0.0, 1.0), 2.5,
                  r.label == 1 ? kPositiveColor : kControlColor);
  canvas.title("score vs " + cov + ", epoch " + std::to_string(epoch));
  return canvas.finish();
}

}  // namespace

HistogramTable score_histogram(std::span<const int> labels, std::span<const double> scores) {
  HistogramTable hist;
  hist.bin_lo.resize(kHistogramBins);
  hist.bin_hi.resize(kHistogramBins);
  hist.count_controls.assign(kHistogramBins, 0);
  hist.count_positives.assign(kHistogramBins, 0);
  for (int b = 0; b < kHistogramBins; ++b) {
    hist.bin_lo[b] = b / static_cast<double>(kHistogramBins);
    hist.bin_hi[b] = (b + 1) / static_cast<double>(kHistogramBins);
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    int b = static_cast<int>(std::floor(scores[i] * kHistogramBins));
    b = std::clamp(b, 0, kHistogramBins - 1);  // clamp out-of-range into end bins
    (labels[i] == 1 ? hist.count_positives : hist.count_controls)[b]++;
  }
  return hist;
}

ReportBundle build_report(const ScoreTable& dump, const std::vector<FomSpec>& foms,
                          const SelectionPolicy& policy,
                          const std::optional<std::string>& covariate, int jobs) {
  if (covariate) {
    const bool known = std::any_of(dump.records.begin(), dump.records.end(),
                                   [&](const ScoreRecord& r) { return r.covariates.count(*covariate); });
    if (!known) throw Error(Errc::unknown_covariate, *covariate);
  }

  ReportBundle bundle;
  bundle.covariate = covariate;
  bundle.series = fom_series(dump, foms, jobs);

  std::set<int> selected_epochs;
  for (const auto& fom : foms) {
    FomSelection sel{fom, policy, select_epoch(bundle.series, fom, policy, &dump)};
    selected_epochs.insert(sel.selection.epoch);
    bundle.selections.push_back(sel);
  }

  const auto slices = split_by_epoch(dump);
  const auto grid = default_threshold_grid();
  for (const auto& slice : slices) {
    if (!selected_epochs.count(slice.epoch)) continue;
    EpochReport report;
    report.epoch = slice.epoch;
    report.histogram = score_histogram(slice.labels, slice.scores);
    report.sens_spec = threshold_curves(slice.labels, slice.scores, grid);
    for (std::size_t k = 0; k < slice.record_indices.size(); ++k) {
      const auto& rec = dump.records[slice.record_indices[k]];
      ScatterRow row{slice.epoch, rec.subject_id, rec.label,
                     std::numeric_limits<double>::quiet_NaN(), rec.score};
      report.scores.push_back(row);
      if (covariate) {
        auto it = rec.covariates.find(*covariate);
        if (it != rec.covariates.end()) {
          row.covariate = it->second;
          report.covariate_scatter.push_back(row);
        }
      }
    }
    bundle.epoch_reports.push_back(std::move(report));
  }
  return bundle;
}

std::string selection_json(const ReportBundle& bundle) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& sel : bundle.selections) {
    out.push_back({{"fom", fom_spec_to_string(sel.fom)},
                   {"policy",
                    {{"tie_tolerance", sel.policy.tie_tolerance},
                     {"tie_break", tie_break_name(sel.policy.tie_break)}}},
                   {"epoch", sel.selection.epoch},
                   {"value", sel.selection.value}});
  }
  return out.dump(2) + "\n";
}

std::vector<std::string> write_report(const ReportBundle& bundle, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto emit = [&](const fs::path& rel, const std::string& content) {
    write_file(fs::path(dir) / rel, content);
    written.push_back(rel.string());
  };

  emit("fom_series.csv", series_csv(bundle.series));
  emit("fom_series.svg", series_svg(bundle.series));
  emit("selection.json", selection_json(bundle));

  for (const auto& report : bundle.epoch_reports) {
    const fs::path sub = "epoch_" + std::to_string(report.epoch);
    fs::create_directories(fs::path(dir) / sub);
    emit(sub / "histogram.csv", histogram_csv(report.histogram));
    emit(sub / "histogram.svg", histogram_svg(report.histogram, report.epoch));
    emit(sub / "sens_spec.csv", sens_spec_csv(report.sens_spec));
    emit(sub / "sens_spec.svg", sens_spec_svg(report.sens_spec, report.epoch));
    emit(sub / "scores.csv", scatter_csv(report.scores, false));
    if (bundle.covariate) {
      emit(sub / ("score_vs_" + *bundle.covariate + ".csv"),
           scatter_csv(report.covariate_scatter, true));
      emit(sub / ("score_vs_" + *bundle.covariate + ".svg"),
           covariate_svg(report.covariate_scatter, *bundle.covariate, report.epoch));
    }
  }
  return written;
}

}  // namespace clinfom
