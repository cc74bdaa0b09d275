#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "clinfom/epoch_select.hpp"
#include "clinfom/error.hpp"
#include "clinfom/hyper_search.hpp"
#include "clinfom/metrics.hpp"
#include "clinfom/rng.hpp"
#include "clinfom/score_table.hpp"
#include "clinfom/synth.hpp"

using namespace clinfom;

TEST_CASE("exp1 tables pass validation and have the promised shape") {
  const Exp1Config config;
  const Exp1Output out = gen_experiment1(config, Exp1Dataset::default_params(), 0);
  REQUIRE(static_cast<int>(out.folds.size()) == config.folds);

  std::set<std::string> validation_subjects;
  for (int k = 0; k < config.folds; ++k) {
    const ScoreTable& val = out.folds[k].validation;
    CHECK(validate(val).empty());
    CHECK(validate(out.folds[k].train).empty());
    CHECK(val.level == Level::object);

    std::map<std::string, int> object_counts;
    int controls = 0, positives = 0;
    for (const auto& rec : val.records) {
      object_counts[rec.subject_id]++;
      (rec.label == 1 ? positives : controls)++;
      CHECK(rec.fold == k);
    }
    for (const auto& [subject, count] : object_counts) {
      CHECK(count == config.objects_per_subject);
      CHECK(validation_subjects.insert(subject).second);  // folds partition subjects
    }
    // fold sizes differ by at most one subject per class
    CHECK(std::abs(controls - positives) <= config.objects_per_subject);
  }
  CHECK(static_cast<int>(validation_subjects.size()) == 2 * config.n_subjects_per_class);
}

TEST_CASE("exp1 is deterministic per (config, params, seed)") {
  const Exp1Config config;
  const ParamMap params{{"threshold", 0.4}, {"smoothing", 0.5}};
  const Exp1Output a = gen_experiment1(config, params, 17);
  const Exp1Output b = gen_experiment1(config, params, 17);
  const std::string csv_a = serialize_score_table(a.folds[2].validation, TableFormat::csv);
  const std::string csv_b = serialize_score_table(b.folds[2].validation, TableFormat::csv);
  CHECK(csv_a == csv_b);
  const Exp1Output c = gen_experiment1(config, params, 18);
  CHECK(csv_a != serialize_score_table(c.folds[2].validation, TableFormat::csv));
}

TEST_CASE("exp1 separable limit: tiny noise and no outliers give auc near 1") {
  Exp1Config config;
  config.noise_scale = 1e-4;
  config.outlier_rate = 0.0;
  config.position_effect = 0.0;
  const Exp1Adapter adapter(config, 4);
  ObjectiveSpec spec;
  spec.aggregation = parse_aggregation_rule("nth_largest:2");
  spec.folds = config.folds;
  for (const auto& params :
       {ParamMap{{"threshold", 0.3}, {"smoothing", 0.3}},
        ParamMap{{"threshold", 0.8}, {"smoothing", 1.5}}}) {
    const ObjectiveValue value = cv_objective(adapter, spec, params, 0);
    CHECK(value.aux_foms.at("object_auc") > 0.99);
    CHECK(value.aux_foms.at("subject_auc") > 0.99);
  }
}

TEST_CASE("exp1 scorer needs its two knobs") {
  const Exp1Config config;
  const Exp1Dataset dataset(config, 0);
  CHECK_THROWS_AS(dataset.fold_tables({{"threshold", 0.5}}, 0), Error);
  CHECK_THROWS_AS(dataset.fold_tables({{"smoothing", 0.5}}, 0), Error);
  CHECK_THROWS_AS(dataset.fold_tables(Exp1Dataset::default_params(), 99), Error);
}

TEST_CASE("exp1 config validation") {
  Exp1Config bad;
  bad.folds = 1;
  CHECK_THROWS_AS(Exp1Dataset(bad, 0), Error);
  bad = Exp1Config{};
  bad.outlier_rate = 1.0;
  CHECK_THROWS_AS(Exp1Dataset(bad, 0), Error);
  bad = Exp1Config{};
  bad.objects_per_subject = 0;
  CHECK_THROWS_AS(Exp1Dataset(bad, 0), Error);
}

TEST_CASE("exp1 object and subject optima decorrelate over random trials") {
  // reduced-budget version of the acceptance check
  const Exp1Adapter adapter(Exp1Config{}, derive_seed(0, "adapter", 0));
  ObjectiveSpec spec;
  spec.level = Level::subject;
  spec.aggregation = parse_aggregation_rule("nth_largest:2");
  spec.folds = 5;
  const TrialLedger ledger = run_search(adapter, spec, Exp1Dataset::default_space(), 120,
                                        Strategy::random, 0, 0);
  const LedgerAnalysis analysis = ledger_analysis(ledger);
  CHECK(std::abs(analysis.spearman) < 0.3);
}

TEST_CASE("exp2 dump shape, determinism, validation") {
  const Exp2Config config;
  const ScoreTable dump = gen_experiment2(config, 0);
  CHECK(validate(dump).empty());
  CHECK(dump.level == Level::subject);
  CHECK(dump.records.size() ==
        static_cast<std::size_t>(2 * config.n_per_class * config.n_epochs));

  // full panel: every subject appears at every epoch
  std::map<std::string, std::set<int>> epochs_by_subject;
  for (const auto& rec : dump.records) {
    REQUIRE(rec.epoch.has_value());
    CHECK(rec.score >= 0.0);
    CHECK(rec.score <= 1.0);
    CHECK(rec.covariates.count("cov_ga_days") == 1);
    epochs_by_subject[rec.subject_id].insert(*rec.epoch);
  }
  CHECK(epochs_by_subject.size() == static_cast<std::size_t>(2 * config.n_per_class));
  for (const auto& [subject, epochs] : epochs_by_subject)
    CHECK(epochs.size() == static_cast<std::size_t>(config.n_epochs));

  CHECK(serialize_score_table(dump, TableFormat::csv) ==
        serialize_score_table(gen_experiment2(config, 0), TableFormat::csv));
  CHECK(serialize_score_table(dump, TableFormat::csv) !=
        serialize_score_table(gen_experiment2(config, 1), TableFormat::csv));
}

TEST_CASE("exp2 static limit: zero rates freeze the series") {
  Exp2Config config;
  config.tail_compression_rate = 0.0;
  config.overconfidence_rate = 0.0;
  const ScoreTable dump = gen_experiment2(config, 5);
  const FomSpec auc_spec{FomSpec::Kind::auc, std::nullopt};
  const FomSeries series = fom_series(dump, {auc_spec});
  const auto& values = *series.find(auc_spec);
  const double lo = *std::min_element(values.begin(), values.end());
  const double hi = *std::max_element(values.begin(), values.end());
  CHECK(hi - lo < 0.02);  // only the per-epoch jitter remains
}

TEST_CASE("exp2 early stopping: validation loss peaks well before sliver auc") {
  const ScoreTable dump = gen_experiment2({}, 0);
  const FomSpec neg_ce{FomSpec::Kind::neg_val_ce, std::nullopt};
  const FomSpec sliver{FomSpec::Kind::sliver_auc, 90};
  const FomSeries series = fom_series(dump, {neg_ce, sliver});

  SelectionPolicy policy;  // earliest, tolerance 0.005
  const Selection ce_pick = select_epoch(series, neg_ce, policy);
  const Selection sliver_pick = select_epoch(series, sliver, policy);
  CHECK(ce_pick.epoch <= sliver_pick.epoch - 5);
}

TEST_CASE("exp2 sliver and sensitivity series rise monotonically after smoothing") {
  const ScoreTable dump = gen_experiment2({}, 0);
  const FomSpec sliver{FomSpec::Kind::sliver_auc, 90};
  const FomSpec sens{FomSpec::Kind::sens_at_spec, 90};
  const FomSeries series = fom_series(dump, {sliver, sens});
  for (const auto* values : {series.find(sliver), series.find(sens)}) {
    REQUIRE(values);
    const auto smoothed = moving_max(*values, 3);
    for (std::size_t e = 0; e + 1 < smoothed.size(); ++e)
      CHECK(smoothed[e] <= smoothed[e + 1] + 1e-12);
  }
}

TEST_CASE("exp2 hard positives sit at low covariate values and sink late") {
  const Exp2Config config;
  const ScoreTable dump = gen_experiment2(config, 0);
  const int last = config.n_epochs - 1;
  double low_cov_sum = 0.0, high_cov_sum = 0.0;
  int low_n = 0, high_n = 0;
  for (const auto& rec : dump.records) {
    if (rec.label != 1 || *rec.epoch != last) continue;
    const double ga = rec.covariates.at("cov_ga_days");
    if (ga < 111.0) {
      low_cov_sum += rec.score;
      ++low_n;
    } else {
      high_cov_sum += rec.score;
      ++high_n;
    }
  }
  REQUIRE(low_n > 0);
  REQUIRE(high_n > 0);
  CHECK(low_cov_sum / low_n < 0.2);   // sacrificed
  CHECK(high_cov_sum / high_n > 0.8); // confidently detected
}

TEST_CASE("exp2 config validation") {
  Exp2Config bad;
  bad.n_epochs = 1;
  CHECK_THROWS_AS(gen_experiment2(bad, 0), Error);
  bad = Exp2Config{};
  bad.hard_positive_fraction = 1.0;
  CHECK_THROWS_AS(gen_experiment2(bad, 0), Error);
  bad = Exp2Config{};
  bad.overconfidence_rate = -0.1;
  CHECK_THROWS_AS(gen_experiment2(bad, 0), Error);
}

TEST_CASE("config json readers apply defaults and overrides") {
  const Exp1Config exp1 = exp1_config_from_json("{\"n_subjects_per_class\": 30, \"folds\": 3}");
  CHECK(exp1.n_subjects_per_class == 30);
  CHECK(exp1.folds == 3);
  CHECK(exp1.objects_per_subject == 7);  // default survives
  const Exp2Config exp2 = exp2_config_from_json("{\"n_epochs\": 12}");
  CHECK(exp2.n_epochs == 12);
  CHECK(exp2.covariate_name == "cov_ga_days");
  CHECK_THROWS_AS(exp1_config_from_json("not json"), Error);
}
