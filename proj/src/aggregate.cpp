#include "clinfom/aggregate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include "clinfom/error.hpp"
#include "clinfom/metrics.hpp"

namespace clinfom {

namespace {

void check_rule(const AggregationRule& rule) {
  using Kind = AggregationRule::Kind;
  if ((rule.kind == Kind::nth_largest || rule.kind == Kind::nth_positional)) {
    if (!rule.n || *rule.n < 1)
      throw Error(Errc::bad_rule, "nth_* rules need n >= 1");
  }
  if (rule.kind == Kind::quantile && (!rule.q || *rule.q < 0.0 || *rule.q > 1.0))
    throw Error(Errc::bad_rule, "quantile rule needs q in [0,1]");
}

double apply_rule(const AggregationRule& rule, const std::string& subject,
                  const std::vector<double>& scores) {
  using Kind = AggregationRule::Kind;
  switch (rule.kind) {
    case Kind::max:
      return *std::max_element(scores.begin(), scores.end());
    case Kind::mean:
      return mean(scores);
    case Kind::nth_largest: {
      const std::size_t n = static_cast<std::size_t>(*rule.n);
      if (scores.size() < n)
        throw Error(Errc::too_few_objects, "subject " + subject + " has " +
                                               std::to_string(scores.size()) +
                                               " object(s), rule needs " + std::to_string(n));
      std::vector<double> sorted = scores;
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      return sorted[n - 1];
    }
    case Kind::nth_positional: {
      const std::size_t n = static_cast<std::size_t>(*rule.n);
      if (scores.size() < n)
        throw Error(Errc::too_few_objects, "subject " + subject + " has " +
                                               std::to_string(scores.size()) +
                                               " object(s), rule needs " + std::to_string(n));
      return scores[n - 1];
    }
    case Kind::quantile: {
      std::vector<double> sorted = scores;
      std::sort(sorted.begin(), sorted.end());
      // Nearest rank: smallest index covering at least q of the mass.
      const auto rank = static_cast<std::size_t>(std::ceil(*rule.q * sorted.size()));
      return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
    }
  }
  throw Error(Errc::internal, "unreachable aggregation kind");
}

}  // namespace

AggregationRule parse_aggregation_rule(const std::string& text) {
  AggregationRule rule;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);

  using Kind = AggregationRule::Kind;
  if (head == "max") rule.kind = Kind::max;
  else if (head == "mean") rule.kind = Kind::mean;
  else if (head == "nth_largest") rule.kind = Kind::nth_largest;
  else if (head == "nth_positional") rule.kind = Kind::nth_positional;
  else if (head == "quantile") rule.kind = Kind::quantile;
  else throw Error(Errc::bad_rule, "unknown aggregation rule '" + text + "'");

  if (rule.kind == Kind::nth_largest || rule.kind == Kind::nth_positional) {
    int n = 0;
    auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), n);
    if (ec != std::errc() || ptr != arg.data() + arg.size() || n < 1)
      throw Error(Errc::bad_rule, "'" + text + "' needs a positive integer argument");
    rule.n = n;
  } else if (rule.kind == Kind::quantile) {
    double q = 0.0;
    auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), q);
    if (ec != std::errc() || ptr != arg.data() + arg.size() || q < 0.0 || q > 1.0)
      throw Error(Errc::bad_rule, "'" + text + "' needs a quantile argument in [0,1]");
    rule.q = q;
  } else if (colon != std::string::npos) {
    throw Error(Errc::bad_rule, "rule '" + head + "' takes no argument");
  }
  return rule;
}

std::string aggregation_rule_to_string(const AggregationRule& rule) {
  using Kind = AggregationRule::Kind;
  switch (rule.kind) {
    case Kind::max: return "max";
    case Kind::mean: return "mean";
    case Kind::nth_largest: return "nth_largest:" + std::to_string(*rule.n);
    case Kind::nth_positional: return "nth_positional:" + std::to_string(*rule.n);
    case Kind::quantile: return "quantile:" + format_double(*rule.q);
  }
  return "";
}

ScoreTable aggregate_subjects(const ScoreTable& table, const AggregationRule& rule) {
  check_rule(rule);
  if (table.level != Level::object)
    throw Error(Errc::bad_param, "aggregation needs an object-level table");

  struct Group {
    ScoreRecord first;
    std::vector<double> scores;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Group> groups;
  for (const auto& rec : table.records) {
    auto [it, inserted] = groups.try_emplace(rec.subject_id);
    if (inserted) {
      order.push_back(rec.subject_id);
      it->second.first = rec;
    } else {
      if (it->second.first.fold != rec.fold)
        throw Error(Errc::mixed_fold_within_subject, "subject " + rec.subject_id);
      if (it->second.first.epoch != rec.epoch)
        throw Error(Errc::mixed_epoch_within_subject, "subject " + rec.subject_id);
    }
    it->second.scores.push_back(rec.score);
  }

  ScoreTable out;
  out.level = Level::subject;
  out.records.reserve(order.size());
  for (const auto& subject : order) {
    const Group& group = groups.at(subject);
    ScoreRecord rec = group.first;
    rec.object_id.reset();
    rec.score = apply_rule(rule, subject, group.scores);
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace clinfom
