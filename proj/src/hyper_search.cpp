#include "clinfom/hyper_search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "clinfom/error.hpp"
#include "clinfom/fold_align.hpp"
#include "clinfom/metrics.hpp"
#include "clinfom/parallel.hpp"
#include "clinfom/rng.hpp"

namespace clinfom {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double gaussian_kernel(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

// Sampling-space view of a continuous/int domain (log space for loguniform).
struct ContinuousView {
  double lo, hi;
  bool log_space;
  bool integral;
};

ContinuousView continuous_view(const ParamDomain& domain) {
  if (const auto* u = std::get_if<UniformDomain>(&domain)) return {u->lo, u->hi, false, false};
  if (const auto* lu = std::get_if<LogUniformDomain>(&domain))
    return {std::log(lu->lo), std::log(lu->hi), true, false};
  const auto& d = std::get<IntDomain>(domain);
  return {static_cast<double>(d.lo), static_cast<double>(d.hi), false, true};
}

double to_sampling_space(const ParamValue& value, const ContinuousView& view) {
  const double raw = std::holds_alternative<int64_t>(value)
                         ? static_cast<double>(std::get<int64_t>(value))
                         : std::get<double>(value);
  return view.log_space ? std::log(raw) : raw;
}

ParamValue from_sampling_space(double x, const ContinuousView& view) {
  x = std::clamp(x, view.lo, view.hi);
  if (view.integral) return static_cast<int64_t>(std::llround(x));
  return view.log_space ? std::exp(x) : x;
}

// Scott's rule with two lower bounds: the configured hard floor, and the
// n-dependent minimum width/(n+2). Without the latter the bandwidth collapses
// once the sampler's own draws dominate the good set, freezing the search at
// the current density mode.
double scott_bandwidth(std::span<const double> points, double width, double floor_frac) {
  const double floor = floor_frac * width;
  const double spread_floor = width / (static_cast<double>(points.size()) + 2.0);
  if (points.size() < 2) return std::max({width / 4, spread_floor, floor});
  const double m = mean(points);
  double var = 0.0;
  for (double p : points) var += (p - m) * (p - m);
  const double sd = std::sqrt(var / points.size());
  const double scott = sd * std::pow(static_cast<double>(points.size()), -0.2);
  return std::max({scott, spread_floor, floor});
}

// KDE with the domain's uniform prior mixed in as one pseudo-observation.
// The prior component keeps the sampler exploring instead of collapsing onto
// its own best draws once their spread hits the bandwidth floor.
double kde_density(double x, std::span<const double> points, double bandwidth, double width) {
  double sum = 1.0 / width;
  for (double p : points) sum += gaussian_kernel((x - p) / bandwidth) / bandwidth;
  return sum / (1.0 + static_cast<double>(points.size()));
}

ParamValue draw_random(const ParamDomain& domain, Rng& rng) {
  if (const auto* u = std::get_if<UniformDomain>(&domain)) return rng.uniform(u->lo, u->hi);
  if (const auto* lu = std::get_if<LogUniformDomain>(&domain))
    return rng.loguniform(lu->lo, lu->hi);
  if (const auto* d = std::get_if<IntDomain>(&domain)) return rng.uniform_int(d->lo, d->hi);
  const auto& cat = std::get<CategoricalDomain>(domain);
  return cat.choices[rng.index(cat.choices.size())];
}

ParamMap draw_random_map(const SearchSpace& space, Rng& rng) {
  ParamMap out;
  for (const auto& [name, domain] : space.params) out[name] = draw_random(domain, rng);
  return out;
}

void check_space(const SearchSpace& space) {
  if (space.params.empty()) throw Error(Errc::empty_space, "search space has no parameters");
  for (const auto& [name, domain] : space.params) {
    if (const auto* u = std::get_if<UniformDomain>(&domain)) {
      if (!(u->lo < u->hi)) throw Error(Errc::bad_config, name + ": lo must be < hi");
    } else if (const auto* lu = std::get_if<LogUniformDomain>(&domain)) {
      if (!(lu->lo > 0.0) || !(lu->lo < lu->hi))
        throw Error(Errc::bad_config, name + ": loguniform needs 0 < lo < hi");
    } else if (const auto* d = std::get_if<IntDomain>(&domain)) {
      if (!(d->lo < d->hi)) throw Error(Errc::bad_config, name + ": lo must be < hi");
    } else if (std::get<CategoricalDomain>(domain).choices.empty()) {
      throw Error(Errc::bad_config, name + ": categorical needs at least one choice");
    }
  }
}

}  // namespace

bool value_in_domain(const ParamValue& value, const ParamDomain& domain) {
  if (const auto* u = std::get_if<UniformDomain>(&domain)) {
    const auto* v = std::get_if<double>(&value);
    return v && *v >= u->lo && *v < u->hi;
  }
  if (const auto* lu = std::get_if<LogUniformDomain>(&domain)) {
    const auto* v = std::get_if<double>(&value);
    return v && *v >= lu->lo && *v <= lu->hi;
  }
  if (const auto* d = std::get_if<IntDomain>(&domain)) {
    const auto* v = std::get_if<int64_t>(&value);
    return v && *v >= d->lo && *v <= d->hi;
  }
  const auto& cat = std::get<CategoricalDomain>(domain);
  const auto* v = std::get_if<std::string>(&value);
  return v && std::find(cat.choices.begin(), cat.choices.end(), *v) != cat.choices.end();
}

ParamMap sample_params(const SearchSpace& space, const TrialLedger& ledger, Strategy strategy,
                       uint64_t rng_seed, const TpeConfig& tpe) {
  check_space(space);
  Rng rng(rng_seed);
  if (strategy == Strategy::random ||
      ledger.trials.size() < static_cast<std::size_t>(tpe.n_startup))
    return draw_random_map(space, rng);

  // Split completed trials at the gamma loss quantile, stable in index order.
  const std::size_t n = ledger.trials.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ledger.trials[a].loss < ledger.trials[b].loss;
  });
  const auto n_good = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(tpe.gamma * static_cast<double>(n))));

  struct SplitValues {
    std::vector<double> good, bad;                 // sampling-space values
    std::vector<std::string> good_cat, bad_cat;    // categorical values
  };
  std::map<std::string, SplitValues> splits;
  for (const auto& [name, domain] : space.params) {
    SplitValues& sv = splits[name];
    for (std::size_t rank = 0; rank < n; ++rank) {
      const Trial& trial = ledger.trials[order[rank]];
      const auto it = trial.params.find(name);
      if (it == trial.params.end()) continue;
      const bool good = rank < n_good;
      if (std::holds_alternative<CategoricalDomain>(domain)) {
        (good ? sv.good_cat : sv.bad_cat).push_back(std::get<std::string>(it->second));
      } else {
        const auto view = continuous_view(domain);
        (good ? sv.good : sv.bad).push_back(to_sampling_space(it->second, view));
      }
    }
  }

  ParamMap best_candidate;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < tpe.n_candidates; ++c) {
    ParamMap candidate;
    double score = 0.0;
    for (const auto& [name, domain] : space.params) {
      const SplitValues& sv = splits.at(name);
      if (const auto* cat = std::get_if<CategoricalDomain>(&domain)) {
        const std::size_t k = cat->choices.size();
        // Laplace-smoothed frequencies over the good set.
        std::vector<double> weights(k);
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
          const auto count = std::count(sv.good_cat.begin(), sv.good_cat.end(), cat->choices[j]);
          weights[j] = static_cast<double>(count) + 1.0;
          total += weights[j];
        }
        double u = rng.uniform() * total;
        std::size_t pick = 0;
        for (; pick + 1 < k && u >= weights[pick]; ++pick) u -= weights[pick];
        candidate[name] = cat->choices[pick];
        const double p_good = weights[pick] / total;
        const auto bad_count =
            std::count(sv.bad_cat.begin(), sv.bad_cat.end(), cat->choices[pick]);
        const double p_bad = (static_cast<double>(bad_count) + 1.0) /
                             (static_cast<double>(sv.bad_cat.size()) + k);
        score += std::log(p_good) - std::log(p_bad);
      } else {
        const auto view = continuous_view(domain);
        const double width = view.hi - view.lo;
        const double h_good = scott_bandwidth(sv.good, width, tpe.bandwidth_floor_frac);
        const double h_bad = scott_bandwidth(sv.bad, width, tpe.bandwidth_floor_frac);
        // Draw from the good KDE mixture; the extra index is the prior
        // component, drawn uniform over the domain.
        const std::size_t pick = rng.index(sv.good.size() + 1);
        double x = pick == sv.good.size()
                       ? rng.uniform(view.lo, view.hi)
                       : std::clamp(sv.good[pick] + rng.normal() * h_good, view.lo, view.hi);
        const ParamValue value = from_sampling_space(x, view);
        const double x_used = to_sampling_space(value, view);
        candidate[name] = value;
        score += std::log(kde_density(x_used, sv.good, h_good, width)) -
                 std::log(kde_density(x_used, sv.bad, h_bad, width));
      }
    }
    if (score > best_score) {
      best_score = score;
      best_candidate = std::move(candidate);
    }
  }
  return best_candidate;
}

// ---- JSON ------------------------------------------------------------------

SearchSpace search_space_from_json(const std::string& text) {
  SearchSpace space;
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(text);
    if (!obj.is_object()) throw Error(Errc::malformed_input, "search space must be an object");
    for (const auto& [name, dom] : obj.items()) {
      const std::string type = dom.at("type").get<std::string>();
      if (type == "uniform")
        space.params[name] = UniformDomain{dom.at("lo").get<double>(), dom.at("hi").get<double>()};
      else if (type == "loguniform")
        space.params[name] =
            LogUniformDomain{dom.at("lo").get<double>(), dom.at("hi").get<double>()};
      else if (type == "int")
        space.params[name] = IntDomain{dom.at("lo").get<int64_t>(), dom.at("hi").get<int64_t>()};
      else if (type == "choice")
        space.params[name] = CategoricalDomain{dom.at("values").get<std::vector<std::string>>()};
      else
        throw Error(Errc::malformed_input, "unknown domain type '" + type + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_input, std::string("search space JSON: ") + e.what());
  }
  check_space(space);
  return space;
}

namespace {

nlohmann::json domain_to_json(const ParamDomain& domain) {
  if (const auto* u = std::get_if<UniformDomain>(&domain))
    return {{"type", "uniform"}, {"lo", u->lo}, {"hi", u->hi}};
  if (const auto* lu = std::get_if<LogUniformDomain>(&domain))
    return {{"type", "loguniform"}, {"lo", lu->lo}, {"hi", lu->hi}};
  if (const auto* d = std::get_if<IntDomain>(&domain))
    return {{"type", "int"}, {"lo", d->lo}, {"hi", d->hi}};
  return {{"type", "choice"}, {"values", std::get<CategoricalDomain>(domain).choices}};
}

nlohmann::json params_to_json(const ParamMap& params) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, value] : params) {
    if (const auto* d = std::get_if<double>(&value)) out[name] = *d;
    else if (const auto* i = std::get_if<int64_t>(&value)) out[name] = *i;
    else out[name] = std::get<std::string>(value);
  }
  return out;
}

ParamMap params_from_json(const nlohmann::json& obj, const SearchSpace& space) {
  ParamMap out;
  for (const auto& [name, value] : obj.items()) {
    const auto it = space.params.find(name);
    if (it != space.params.end() && std::holds_alternative<IntDomain>(it->second))
      out[name] = value.get<int64_t>();
    else if (value.is_string())
      out[name] = value.get<std::string>();
    else if (value.is_number_integer() && it == space.params.end())
      out[name] = value.get<int64_t>();
    else
      out[name] = value.get<double>();
  }
  return out;
}

}  // namespace

std::string search_space_to_json(const SearchSpace& space) {
  nlohmann::json obj = nlohmann::json::object();
  for (const auto& [name, domain] : space.params) obj[name] = domain_to_json(domain);
  return obj.dump();
}

Strategy parse_strategy(const std::string& text) {
  if (text == "random") return Strategy::random;
  if (text == "tpe") return Strategy::tpe;
  throw Error(Errc::bad_param, "unknown strategy '" + text + "'");
}

const char* strategy_name(Strategy s) { return s == Strategy::random ? "random" : "tpe"; }

std::string trial_to_jsonl(const Trial& trial) {
  nlohmann::json obj{{"type", "trial"},
                     {"index", trial.index},
                     {"params", params_to_json(trial.params)},
                     {"loss", trial.loss},
                     {"aux_foms", trial.aux_foms},
                     {"seed", trial.seed}};
  return obj.dump();
}

std::string ledger_header_jsonl(const TrialLedger& ledger) {
  nlohmann::json obj{{"type", "header"},
                     {"space", nlohmann::json::parse(search_space_to_json(ledger.space))},
                     {"strategy", strategy_name(ledger.strategy)},
                     {"objective", ledger.objective_descr}};
  return obj.dump();
}

std::string ledger_to_jsonl(const TrialLedger& ledger) {
  std::string out = ledger_header_jsonl(ledger) + "\n";
  for (const auto& trial : ledger.trials) out += trial_to_jsonl(trial) + "\n";
  return out;
}

TrialLedger ledger_from_jsonl(const std::string& text) {
  TrialLedger ledger;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto obj = nlohmann::json::parse(line);
      const std::string type = obj.at("type").get<std::string>();
      if (type == "header") {
        ledger.space = search_space_from_json(obj.at("space").dump());
        ledger.strategy = parse_strategy(obj.at("strategy").get<std::string>());
        ledger.objective_descr = obj.at("objective").get<std::string>();
        have_header = true;
      } else if (type == "trial") {
        Trial trial;
        trial.index = obj.at("index").get<int>();
        trial.params = params_from_json(obj.at("params"), ledger.space);
        trial.loss = obj.at("loss").get<double>();
        trial.aux_foms = obj.at("aux_foms").get<std::map<std::string, double>>();
        trial.seed = obj.at("seed").get<uint64_t>();
        ledger.trials.push_back(std::move(trial));
      } else {
        throw Error(Errc::malformed_input, "unknown ledger line type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_input, std::string("ledger JSONL: ") + e.what());
  }
  if (!have_header) throw Error(Errc::malformed_input, "ledger is missing its header line");
  for (std::size_t i = 0; i < ledger.trials.size(); ++i)
    if (ledger.trials[i].index != static_cast<int>(i))
      throw Error(Errc::malformed_input, "trial indices must be contiguous from 0");
  return ledger;
}

const Trial& best_trial(const TrialLedger& ledger) {
  if (ledger.trials.empty()) throw Error(Errc::bad_param, "empty ledger");
  std::size_t best = 0;
  for (std::size_t i = 1; i < ledger.trials.size(); ++i)
    if (ledger.trials[i].loss < ledger.trials[best].loss) best = i;
  return ledger.trials[best];
}

// ---- objective -------------------------------------------------------------

ObjectiveValue cv_objective(const ModelAdapter& adapter, const ObjectiveSpec& spec,
                            const ParamMap& params, uint64_t seed) {
  if (spec.folds < 2) throw Error(Errc::bad_config, "objective needs folds >= 2");

  ScoreTable pooled_objects;
  pooled_objects.level = Level::object;
  for (int fold = 0; fold < spec.folds; ++fold) {
    FoldData data = adapter.evaluate_fold(params, fold, derive_seed(seed, "fold", fold));
    bool has_pos = false, has_neg = false;
    for (auto& rec : data.validation.records) {
      rec.fold = fold;
      (rec.label == 1 ? has_pos : has_neg) = true;
      pooled_objects.records.push_back(std::move(rec));
    }
    if (!has_pos || !has_neg)
      throw Error(Errc::degenerate_classes,
                  "validation fold " + std::to_string(fold) + " is missing a class");
  }

  // Folds whose controls have zero spread cannot be aligned; their scores
  // pass through unchanged (reference behavior of the z-map).
  const auto align = [](const ScoreTable& table) {
    try {
      return apply_alignment(table, fit_alignment(table));
    } catch (const Error& e) {
      if (e.code() == Errc::zero_spread) return table;
      throw;
    }
  };

  const ScoreTable aligned_objects = align(pooled_objects);
  const ScoreTable subjects = aggregate_subjects(pooled_objects, spec.aggregation);
  const ScoreTable aligned_subjects = align(subjects);

  auto table_fom = [](const FomSpec& fom, const ScoreTable& table) {
    std::vector<int> labels;
    std::vector<double> scores;
    labels.reserve(table.records.size());
    scores.reserve(table.records.size());
    for (const auto& rec : table.records) {
      labels.push_back(rec.label);
      scores.push_back(rec.score);
    }
    return evaluate_fom(fom, labels, scores);
  };

  ObjectiveValue out;
  const FomSpec auc_spec{FomSpec::Kind::auc, std::nullopt};
  out.aux_foms["object_auc"] = table_fom(auc_spec, aligned_objects);
  out.aux_foms["subject_auc"] = table_fom(auc_spec, aligned_subjects);
  const ScoreTable& driving = spec.level == Level::subject ? aligned_subjects : aligned_objects;
  out.loss = 1.0 - table_fom(spec.fom, driving);
  return out;
}

// ---- search loop -----------------------------------------------------------

TrialLedger run_search(const ObjectiveFn& objective, const SearchSpace& space, int budget,
                       Strategy strategy, uint64_t seed, int jobs, const TrialCallback& on_trial,
                       const TpeConfig& tpe, const std::string& objective_descr) {
  if (budget < 1) throw Error(Errc::bad_param, "budget must be >= 1");
  check_space(space);

  TrialLedger ledger;
  ledger.space = space;
  ledger.strategy = strategy;
  ledger.objective_descr = objective_descr;

  auto run_trial = [&](int i, const TrialLedger& state) {
    Trial trial;
    trial.index = i;
    trial.seed = derive_seed(seed, "eval", static_cast<uint64_t>(i));
    trial.params = sample_params(space, state, strategy,
                                 derive_seed(seed, "params", static_cast<uint64_t>(i)), tpe);
    const ObjectiveValue value = objective(trial.params, trial.seed);
    if (!std::isfinite(value.loss)) throw Error(Errc::internal, "objective returned non-finite loss");
    trial.loss = value.loss;
    trial.aux_foms = value.aux_foms;
    return trial;
  };

  if (strategy == Strategy::random && jobs != 1) {
    // Random trials are independent of ledger state, so they parallelize
    // with results identical to the serial loop.
    ledger.trials.assign(budget, Trial{});
    parallel_for(static_cast<std::size_t>(budget), jobs,
                 [&](std::size_t i) { ledger.trials[i] = run_trial(static_cast<int>(i), ledger); });
    if (on_trial)
      for (const auto& trial : ledger.trials) on_trial(trial);
  } else {
    for (int i = 0; i < budget; ++i) {
      Trial trial = run_trial(i, ledger);
      ledger.trials.push_back(std::move(trial));
      if (on_trial) on_trial(ledger.trials.back());
    }
  }
  return ledger;
}

TrialLedger run_search(const ModelAdapter& adapter, const ObjectiveSpec& spec,
                       const SearchSpace& space, int budget, Strategy strategy, uint64_t seed,
                       int jobs, const TrialCallback& on_trial) {
  std::string descr = std::string("1 - ") + fom_spec_to_string(spec.fom) + " at " +
                      level_name(spec.level) + " level, " + std::to_string(spec.folds) +
                      "-fold, agg " + aggregation_rule_to_string(spec.aggregation) +
                      ", adapter " + adapter.name();
  return run_search(
      [&](const ParamMap& params, uint64_t trial_seed) {
        return cv_objective(adapter, spec, params, trial_seed);
      },
      space, budget, strategy, seed, jobs, on_trial, {}, descr);
}

// ---- analysis --------------------------------------------------------------

namespace {

std::vector<double> ranks_with_ties(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg_rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rank_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(Errc::length_mismatch, "spearman needs two equal-length samples, n >= 2");
  const auto rx = ranks_with_ties(x);
  const auto ry = ranks_with_ties(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

LedgerAnalysis ledger_analysis(const TrialLedger& ledger) {
  if (ledger.trials.empty()) throw Error(Errc::bad_param, "empty ledger");
  LedgerAnalysis analysis;
  std::vector<double> object_aucs, subject_aucs;
  for (const auto& trial : ledger.trials) {
    LedgerAnalysis::Row row;
    row.trial_index = trial.index;
    row.driving_fom = 1.0 - trial.loss;
    row.object_auc = trial.aux_foms.count("object_auc") ? trial.aux_foms.at("object_auc") : 0.0;
    row.subject_auc = trial.aux_foms.count("subject_auc") ? trial.aux_foms.at("subject_auc") : 0.0;
    analysis.by_trial.push_back(row);
    object_aucs.push_back(row.object_auc);
    subject_aucs.push_back(row.subject_auc);
  }
  analysis.sorted_by_driving = analysis.by_trial;
  std::stable_sort(analysis.sorted_by_driving.begin(), analysis.sorted_by_driving.end(),
                   [](const auto& a, const auto& b) { return a.driving_fom < b.driving_fom; });
  analysis.spearman = ledger.trials.size() >= 2
                          ? spearman_rank_correlation(object_aucs, subject_aucs)
                          : 0.0;
  return analysis;
}

}  // namespace clinfom
