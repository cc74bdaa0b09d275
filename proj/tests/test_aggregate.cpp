#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "clinfom/aggregate.hpp"
#include "clinfom/error.hpp"
#include "clinfom/rng.hpp"

using namespace clinfom;

namespace {

ScoreTable object_table(const std::vector<std::pair<std::string, std::vector<double>>>& subjects,
                        int label = 1) {
  ScoreTable table;
  table.level = Level::object;
  for (const auto& [subject, scores] : subjects) {
    for (std::size_t j = 0; j < scores.size(); ++j) {
      ScoreRecord rec;
      rec.subject_id = subject;
      rec.object_id = "v" + std::to_string(j);
      rec.label = label;
      rec.score = scores[j];
      table.records.push_back(rec);
    }
  }
  return table;
}

const std::vector<double> kSeven{0.1, 0.9, 0.5, 0.4, 0.3, 0.2, 0.8};

}  // namespace

TEST_CASE("rule parsing round trips") {
  for (const char* text : {"nth_largest:3", "nth_positional:3", "max", "mean", "quantile:0.75"}) {
    const AggregationRule rule = parse_aggregation_rule(text);
    CHECK(aggregation_rule_to_string(rule) == text);
  }
  CHECK_THROWS_AS(parse_aggregation_rule("nth_largest"), Error);
  CHECK_THROWS_AS(parse_aggregation_rule("nth_largest:0"), Error);
  CHECK_THROWS_AS(parse_aggregation_rule("quantile:1.5"), Error);
  CHECK_THROWS_AS(parse_aggregation_rule("median"), Error);
  CHECK_THROWS_AS(parse_aggregation_rule("max:2"), Error);
}

TEST_CASE("nth largest on the seven object example") {
  const auto table = object_table({{"p", kSeven}});
  const auto out = aggregate_subjects(table, parse_aggregation_rule("nth_largest:3"));
  REQUIRE(out.records.size() == 1);
  CHECK(out.records[0].score == doctest::Approx(0.5));
  CHECK(out.level == Level::subject);
  CHECK_FALSE(out.records[0].object_id.has_value());

  CHECK(aggregate_subjects(table, parse_aggregation_rule("max")).records[0].score ==
        doctest::Approx(0.9));
  CHECK(aggregate_subjects(table, parse_aggregation_rule("nth_positional:3")).records[0].score ==
        doctest::Approx(0.5));  // third in input order
  CHECK(aggregate_subjects(table, parse_aggregation_rule("nth_positional:2")).records[0].score ==
        doctest::Approx(0.9));
}

TEST_CASE("single object subjects are identity under n=1 rules") {
  const auto table = object_table({{"a", {0.37}}, {"b", {0.81}}});
  for (const char* rule : {"nth_largest:1", "nth_positional:1", "max", "mean", "quantile:0.5"}) {
    const auto out = aggregate_subjects(table, parse_aggregation_rule(rule));
    CHECK(out.records[0].score == doctest::Approx(0.37));
    CHECK(out.records[1].score == doctest::Approx(0.81));
  }
}

TEST_CASE("too few objects is reported per subject") {
  const auto table = object_table({{"a", {0.1, 0.2}}});
  CHECK_THROWS_WITH_AS(aggregate_subjects(table, parse_aggregation_rule("nth_largest:3")),
                       doctest::Contains("subject a"), Error);
}

TEST_CASE("metadata carries over and order is first appearance") {
  ScoreTable table = object_table({{"b", {0.3, 0.5}}, {"a", {0.6, 0.2}}});
  for (auto& rec : table.records) {
    rec.fold = 2;
    rec.epoch = 7;
    rec.covariates["cov_x"] = 42.0;
  }
  const auto out = aggregate_subjects(table, parse_aggregation_rule("mean"));
  REQUIRE(out.records.size() == 2);
  CHECK(out.records[0].subject_id == "b");
  CHECK(out.records[1].subject_id == "a");
  CHECK(out.records[0].fold == 2);
  CHECK(out.records[0].epoch == 7);
  CHECK(out.records[0].covariates.at("cov_x") == 42.0);
  CHECK(out.records[0].score == doctest::Approx(0.4));
}

TEST_CASE("mixed fold or epoch within a subject is rejected") {
  ScoreTable table = object_table({{"a", {0.1, 0.2}}});
  table.records[0].fold = 0;
  table.records[1].fold = 1;
  CHECK_THROWS_AS(aggregate_subjects(table, parse_aggregation_rule("max")), Error);
  table.records[1].fold = 0;
  table.records[0].epoch = 0;
  table.records[1].epoch = 1;
  CHECK_THROWS_AS(aggregate_subjects(table, parse_aggregation_rule("max")), Error);
}

TEST_CASE("subject level table is rejected") {
  ScoreTable table;
  table.level = Level::subject;
  table.records.push_back({"a", {}, {}, {}, 0, 0.5, {}});
  CHECK_THROWS_AS(aggregate_subjects(table, parse_aggregation_rule("max")), Error);
}

TEST_CASE("aggregation stays within the object score range") {
  Rng rng(3);
  std::vector<std::pair<std::string, std::vector<double>>> subjects;
  for (int s = 0; s < 25; ++s) {
    std::vector<double> scores;
    const std::size_t n = 3 + rng.index(9);
    for (std::size_t j = 0; j < n; ++j) scores.push_back(rng.uniform(-3.0, 3.0));
    subjects.emplace_back("s" + std::to_string(s), scores);
  }
  const auto table = object_table(subjects);
  for (const char* rule :
       {"nth_largest:2", "nth_positional:3", "max", "mean", "quantile:0.25", "quantile:1"}) {
    const auto out = aggregate_subjects(table, parse_aggregation_rule(rule));
    CHECK(out.records.size() == subjects.size());
    for (std::size_t s = 0; s < subjects.size(); ++s) {
      const auto& scores = subjects[s].second;
      const double lo = *std::min_element(scores.begin(), scores.end());
      const double hi = *std::max_element(scores.begin(), scores.end());
      CHECK(out.records[s].score >= lo - 1e-15);
      CHECK(out.records[s].score <= hi + 1e-15);
    }
  }
}

TEST_CASE("order statistic rules commute with monotone transforms") {
  Rng rng(5);
  std::vector<std::pair<std::string, std::vector<double>>> subjects;
  for (int s = 0; s < 12; ++s) {
    std::vector<double> scores;
    for (int j = 0; j < 7; ++j) scores.push_back(rng.uniform(0.0, 1.0));
    subjects.emplace_back("s" + std::to_string(s), scores);
  }
  const auto table = object_table(subjects);
  auto warped = table;
  const auto warp = [](double v) { return std::exp(2.0 * v) - 0.5 * v; };
  for (auto& rec : warped.records) rec.score = warp(rec.score);

  for (const char* rule : {"nth_largest:3", "nth_positional:4", "max", "quantile:0.6"}) {
    const auto parsed = parse_aggregation_rule(rule);
    const auto base = aggregate_subjects(table, parsed);
    const auto after = aggregate_subjects(warped, parsed);
    for (std::size_t s = 0; s < base.records.size(); ++s)
      CHECK(after.records[s].score == doctest::Approx(warp(base.records[s].score)).epsilon(1e-12));
  }
}

TEST_CASE("nth largest 1 equals max; mean of constants is the constant") {
  const auto table = object_table({{"a", {0.4, 0.9, 0.1}}, {"b", {0.7, 0.7, 0.7}}});
  const auto nth1 = aggregate_subjects(table, parse_aggregation_rule("nth_largest:1"));
  const auto maxed = aggregate_subjects(table, parse_aggregation_rule("max"));
  for (std::size_t s = 0; s < nth1.records.size(); ++s)
    CHECK(nth1.records[s].score == maxed.records[s].score);
  CHECK(aggregate_subjects(table, parse_aggregation_rule("mean")).records[1].score ==
        doctest::Approx(0.7));
}

TEST_CASE("quantile uses nearest rank") {
  const auto table = object_table({{"a", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7}}});
  CHECK(aggregate_subjects(table, parse_aggregation_rule("quantile:0.75")).records[0].score ==
        doctest::Approx(0.6));  // ceil(0.75*7) = 6th smallest
  CHECK(aggregate_subjects(table, parse_aggregation_rule("quantile:0")).records[0].score ==
        doctest::Approx(0.1));
  CHECK(aggregate_subjects(table, parse_aggregation_rule("quantile:1")).records[0].score ==
        doctest::Approx(0.7));
}
