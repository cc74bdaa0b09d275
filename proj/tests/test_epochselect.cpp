#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "clinfom/epoch_select.hpp"
#include "clinfom/error.hpp"
#include "clinfom/metrics.hpp"
#include "clinfom/report.hpp"
#include "clinfom/rng.hpp"
#include "clinfom/synth.hpp"
#include "oracles.hpp"

using namespace clinfom;

namespace {

ScoreTable epoch_dump(const std::vector<std::vector<std::pair<int, double>>>& per_epoch) {
  ScoreTable dump;
  dump.level = Level::subject;
  for (std::size_t e = 0; e < per_epoch.size(); ++e) {
    int i = 0;
    for (const auto& [label, score] : per_epoch[e]) {
      ScoreRecord rec;
      rec.subject_id = "s" + std::to_string(i++);
      rec.epoch = static_cast<int>(e);
      rec.label = label;
      rec.score = score;
      dump.records.push_back(rec);
    }
  }
  return dump;
}

const FomSpec kAuc{FomSpec::Kind::auc, std::nullopt};
const FomSpec kNegCe{FomSpec::Kind::neg_val_ce, std::nullopt};
const FomSpec kSliver90{FomSpec::Kind::sliver_auc, 90};

}  // namespace

TEST_CASE("fom series evaluates per epoch") {
  const auto dump = epoch_dump({
      {{0, 0.5}, {1, 0.5}, {0, 0.5}, {1, 0.5}},  // full ties at epoch 0
      {{0, 0.1}, {1, 0.9}, {0, 0.2}, {1, 0.8}},  // perfect separation at epoch 1
  });
  const FomSeries series = fom_series(dump, {kAuc});
  REQUIRE(series.epochs == std::vector<int>{0, 1});
  const auto* values = series.find(kAuc);
  REQUIRE(values);
  CHECK((*values)[0] == 0.5);
  CHECK((*values)[1] == 1.0);
}

TEST_CASE("neg_val_ce is the negated balanced cross entropy") {
  const auto dump = epoch_dump({{{0, 0.5}, {1, 0.5}}});
  const FomSeries series = fom_series(dump, {kNegCe});
  CHECK((*series.find(kNegCe))[0] == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("single epoch series equals direct metric calls") {
  Rng rng(77);
  std::vector<std::pair<int, double>> rows;
  std::vector<int> labels;
  std::vector<double> scores;
  for (int i = 0; i < 30; ++i) {
    const int label = i % 2;
    const double score = std::clamp(0.4 + 0.3 * label + 0.2 * rng.normal(), 0.0, 1.0);
    rows.emplace_back(label, score);
    labels.push_back(label);
    scores.push_back(score);
  }
  const FomSeries series =
      fom_series(epoch_dump({rows}), {kAuc, kNegCe, kSliver90, {FomSpec::Kind::fisher, {}}});
  CHECK((*series.find(kAuc))[0] == auc(labels, scores));
  CHECK((*series.find(kSliver90))[0] == sliver_auc(labels, scores, 90));
  CHECK((*series.find(kNegCe))[0] == -balanced_cross_entropy(labels, scores));
}

TEST_CASE("fom series errors") {
  ScoreTable no_epochs;
  no_epochs.level = Level::subject;
  no_epochs.records.push_back({"a", {}, {}, {}, 0, 0.5, {}});
  CHECK_THROWS_AS(fom_series(no_epochs, {kAuc}), Error);

  const auto one_class = epoch_dump({{{0, 0.5}, {0, 0.6}}});
  CHECK_THROWS_AS(fom_series(one_class, {kAuc}), Error);
}

TEST_CASE("parallel fom series is identical to serial") {
  const ScoreTable dump = gen_experiment2({}, 3);
  const std::vector<FomSpec> foms{kAuc, kNegCe, kSliver90, {FomSpec::Kind::sens_at_spec, 90}};
  const FomSeries serial = fom_series(dump, foms, 1);
  const FomSeries parallel = fom_series(dump, foms, 0);
  REQUIRE(serial.epochs == parallel.epochs);
  for (std::size_t f = 0; f < foms.size(); ++f)
    for (std::size_t e = 0; e < serial.epochs.size(); ++e)
      CHECK(serial.values[f][e] == parallel.values[f][e]);  // bitwise
}

TEST_CASE("select epoch tie handling") {
  FomSeries series;
  series.epochs = {0, 1, 2};
  series.specs = {kAuc};
  series.values = {{0.1, 0.9, 0.9}};
  SelectionPolicy policy;
  policy.tie_tolerance = 0.0;
  policy.tie_break = SelectionPolicy::TieBreak::earliest;
  CHECK(select_epoch(series, kAuc, policy).epoch == 1);
  policy.tie_break = SelectionPolicy::TieBreak::latest;
  CHECK(select_epoch(series, kAuc, policy).epoch == 2);

  series.values = {{0.80, 0.89, 0.90}};
  policy.tie_break = SelectionPolicy::TieBreak::earliest;
  policy.tie_tolerance = 0.02;
  CHECK(select_epoch(series, kAuc, policy).epoch == 1);  // 0.89 >= 0.98 * 0.90
  policy.tie_tolerance = 0.0;
  const Selection exact = select_epoch(series, kAuc, policy);
  CHECK(exact.epoch == 2);
  CHECK(exact.value == 0.90);
}

TEST_CASE("select epoch tolerates negative series") {
  FomSeries series;
  series.epochs = {0, 1, 2};
  series.specs = {kNegCe};
  series.values = {{-0.9, -0.5, -0.502}};
  SelectionPolicy policy;
  policy.tie_tolerance = 0.005;
  policy.tie_break = SelectionPolicy::TieBreak::latest;
  CHECK(select_epoch(series, kNegCe, policy).epoch == 2);  // -0.502 within 0.5% of -0.5
}

TEST_CASE("select epoch unknown fom") {
  FomSeries series;
  series.epochs = {0};
  series.specs = {kAuc};
  series.values = {{0.5}};
  CHECK_THROWS_AS(select_epoch(series, kSliver90, {}), Error);
}

TEST_CASE("most stable tie break picks the flattest candidate") {
  // two epochs with equal auc; epoch 1 has a wide score gap (flat curves at
  // the operating point), epoch 0 a razor-thin margin.
  std::vector<std::pair<int, double>> sharp, flat;
  for (int i = 0; i < 10; ++i) sharp.emplace_back(0, 0.48 + 0.001 * i);
  for (int i = 0; i < 10; ++i) sharp.emplace_back(1, 0.51 + 0.001 * i);
  for (int i = 0; i < 10; ++i) flat.emplace_back(0, 0.05 + 0.01 * i);
  for (int i = 0; i < 10; ++i) flat.emplace_back(1, 0.85 + 0.01 * i);
  const ScoreTable dump = epoch_dump({sharp, flat});
  const FomSeries series = fom_series(dump, {kAuc});
  CHECK((*series.find(kAuc))[0] == 1.0);
  CHECK((*series.find(kAuc))[1] == 1.0);

  SelectionPolicy policy;
  policy.tie_tolerance = 0.0;
  policy.tie_break = SelectionPolicy::TieBreak::most_stable;
  const Selection sel = select_epoch(series, kAuc, policy, &dump, 90.0, 0.05);
  CHECK(sel.epoch == 1);
  CHECK_THROWS_AS(select_epoch(series, kAuc, policy), Error);  // needs the dump
}

TEST_CASE("threshold curves examples and monotonicity") {
  const std::vector<int> labels{0, 1};
  const std::vector<double> scores{0.2, 0.8};
  const auto single = threshold_curves(labels, scores, std::vector<double>{0.5});
  CHECK(single[0].sensitivity == 1.0);
  CHECK(single[0].specificity == 1.0);

  const auto below = threshold_curves(labels, scores, std::vector<double>{0.1});
  CHECK(below[0].sensitivity == 1.0);
  CHECK(below[0].specificity == 0.0);

  const auto derived = threshold_curves(std::vector<int>{1, 0, 1, 0},
                                        std::vector<double>{0.9, 0.8, 0.7, 0.6},
                                        std::vector<double>{0.75});
  CHECK(derived[0].sensitivity == 0.5);
  CHECK(derived[0].specificity == 0.5);

  Rng rng(9);
  std::vector<int> rnd_labels;
  std::vector<double> rnd_scores;
  for (int i = 0; i < 60; ++i) {
    rnd_labels.push_back(i % 2);
    rnd_scores.push_back(rng.uniform());
  }
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(i / 50.0);
  const auto curves = threshold_curves(rnd_labels, rnd_scores, grid);
  for (std::size_t i = 0; i + 1 < curves.size(); ++i) {
    CHECK(curves[i].sensitivity >= curves[i + 1].sensitivity);
    CHECK(curves[i].specificity <= curves[i + 1].specificity);
  }
  // spot check one grid point against the direct-count oracle
  const auto want = oracles::operating_point(rnd_labels, rnd_scores, grid[17]);
  CHECK(curves[17].sensitivity == want.sensitivity);
  CHECK(curves[17].specificity == want.specificity);

  CHECK_THROWS_AS(threshold_curves(labels, scores, std::vector<double>{}), Error);
  CHECK_THROWS_AS(threshold_curves(labels, scores, std::vector<double>{0.5, 0.4}), Error);
}

TEST_CASE("stability profile on a plateau and on a cliff") {
  // wide gap: both curves flat inside the window
  const std::vector<int> labels{0, 0, 1, 1};
  const std::vector<double> scores{0.1, 0.15, 0.9, 0.95};
  const StabilityProfile calm = stability_profile(labels, scores, 90.0, 0.05);
  CHECK(calm.sens_slope == 0.0);
  CHECK(calm.spec_slope == 0.0);
  CHECK(calm.threshold_star == doctest::Approx(0.525));  // middle of the deployable gap

  const std::vector<int> tied_labels{1, 0, 1};
  const std::vector<double> tied{0.5, 0.5, 0.5};
  const StabilityProfile degenerate = stability_profile(tied_labels, tied, 90.0, 0.05);
  CHECK(degenerate.sens_slope == 0.0);
  CHECK(degenerate.spec_slope == 0.0);
  CHECK(std::isinf(degenerate.threshold_star));

  // derived example: slopes from the finite-difference sweep oracle
  const std::vector<int> four{1, 0, 1, 0};
  const std::vector<double> four_scores{0.9, 0.8, 0.7, 0.6};
  const StabilityProfile profile = stability_profile(four, four_scores, 75.0, 0.05);
  const auto lo = oracles::operating_point(four, four_scores, profile.threshold_star - 0.05);
  const auto hi = oracles::operating_point(four, four_scores, profile.threshold_star + 0.05);
  CHECK(profile.sens_slope ==
        doctest::Approx(std::abs(hi.sensitivity - lo.sensitivity) / 0.1).epsilon(1e-12));
  CHECK(profile.spec_slope ==
        doctest::Approx(std::abs(hi.specificity - lo.specificity) / 0.1).epsilon(1e-12));
}

TEST_CASE("moving max smooths trailing windows") {
  const std::vector<double> values{0.1, 0.3, 0.2, 0.25, 0.5, 0.4};
  const auto smoothed = moving_max(values, 3);
  CHECK(smoothed == std::vector<double>{0.1, 0.3, 0.3, 0.3, 0.5, 0.5});
}

TEST_CASE("report bundle layout and contents") {
  const ScoreTable dump = gen_experiment2({}, 1);
  SelectionPolicy policy;
  const std::vector<FomSpec> foms{kNegCe, kSliver90};
  const ReportBundle bundle = build_report(dump, foms, policy, std::string("cov_ga_days"));
  REQUIRE(bundle.selections.size() == 2);
  CHECK_FALSE(bundle.epoch_reports.empty());
  for (const auto& report : bundle.epoch_reports) {
    int histogram_total = 0;
    for (int b = 0; b < 20; ++b)
      histogram_total += report.histogram.count_controls[b] + report.histogram.count_positives[b];
    CHECK(histogram_total == 160);  // every subject lands in one display bin
    CHECK(report.sens_spec.size() == 101);
    CHECK(report.scores.size() == 160);
    CHECK(report.covariate_scatter.size() == 160);
  }

  const auto dir = std::filesystem::temp_directory_path() / "clinfom_report_test";
  std::filesystem::remove_all(dir);
  const auto written = write_report(bundle, dir.string());
  CHECK(std::filesystem::exists(dir / "fom_series.csv"));
  CHECK(std::filesystem::exists(dir / "fom_series.svg"));
  CHECK(std::filesystem::exists(dir / "selection.json"));
  for (const auto& report : bundle.epoch_reports) {
    const auto sub = dir / ("epoch_" + std::to_string(report.epoch));
    for (const char* name :
         {"histogram.csv", "histogram.svg", "sens_spec.csv", "sens_spec.svg", "scores.csv",
          "score_vs_cov_ga_days.csv", "score_vs_cov_ga_days.svg"})
      CHECK(std::filesystem::exists(sub / name));
  }
  // SVG well-formedness basics
  std::ifstream svg_in(dir / "fom_series.svg");
  std::string svg((std::istreambuf_iterator<char>(svg_in)), std::istreambuf_iterator<char>());
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("xmlns=") != std::string::npos);
  std::filesystem::remove_all(dir);

  CHECK_THROWS_AS(build_report(dump, foms, policy, std::string("cov_missing")), Error);
}

TEST_CASE("fixed histogram bins clamp out of range scores") {
  const HistogramTable hist =
      score_histogram(std::vector<int>{0, 1, 0, 1}, std::vector<double>{-0.2, 1.7, 0.5, 0.999});
  CHECK(hist.count_controls[0] == 1);
  CHECK(hist.count_positives[19] == 2);
  CHECK(hist.count_controls[10] == 1);
  CHECK(hist.bin_lo[0] == 0.0);
  CHECK(hist.bin_hi[19] == 1.0);
}
