#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "clinfom/aggregate.hpp"
#include "clinfom/fom_spec.hpp"
#include "clinfom/score_table.hpp"

namespace clinfom {

// ---- search space ----------------------------------------------------------

struct UniformDomain {
  double lo, hi;
};
struct LogUniformDomain {
  double lo, hi;  // lo > 0
};
struct IntDomain {
  int64_t lo, hi;  // inclusive
};
struct CategoricalDomain {
  std::vector<std::string> choices;
};

using ParamDomain = std::variant<UniformDomain, LogUniformDomain, IntDomain, CategoricalDomain>;
using ParamValue = std::variant<double, int64_t, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

struct SearchSpace {
  std::map<std::string, ParamDomain> params;
};

SearchSpace search_space_from_json(const std::string& text);
std::string search_space_to_json(const SearchSpace& space);

bool value_in_domain(const ParamValue& value, const ParamDomain& domain);

// ---- trials ----------------------------------------------------------------

enum class Strategy { random, tpe };
Strategy parse_strategy(const std::string& text);
const char* strategy_name(Strategy s);

struct Trial {
  int index = 0;
  ParamMap params;
  double loss = 0.0;
  std::map<std::string, double> aux_foms;
  uint64_t seed = 0;
};

struct TrialLedger {
  SearchSpace space;
  std::vector<Trial> trials;
  Strategy strategy = Strategy::random;
  std::string objective_descr;
};

std::string trial_to_jsonl(const Trial& trial);
std::string ledger_header_jsonl(const TrialLedger& ledger);
std::string ledger_to_jsonl(const TrialLedger& ledger);
TrialLedger ledger_from_jsonl(const std::string& text);

const Trial& best_trial(const TrialLedger& ledger);  // argmin loss, ties to lowest index

// ---- sampling --------------------------------------------------------------

// TPE-lite settings; the optimizer falls back to random sampling until
// n_startup trials have completed.
struct TpeConfig {
  double gamma = 0.25;
  int n_startup = 10;
  int n_candidates = 24;
  double bandwidth_floor_frac = 1e-3;  // of the domain width
};

// random: independent draws per domain. tpe: splits completed trials at the
// gamma loss quantile, fits per-parameter Gaussian KDEs (Scott bandwidth;
// smoothed frequencies for categoricals), draws n_candidates from the good
// density and returns the candidate maximizing good/bad density ratio.
ParamMap sample_params(const SearchSpace& space, const TrialLedger& ledger, Strategy strategy,
                       uint64_t rng_seed, const TpeConfig& tpe = {});

// ---- objective -------------------------------------------------------------

struct FoldData {
  ScoreTable train;
  ScoreTable validation;  // object level, records tagged with the fold
};

// Produces per-fold train/validation object scores for one parameter
// setting. Implementations must be pure given (params, fold, seed).
class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  virtual FoldData evaluate_fold(const ParamMap& params, int fold, uint64_t seed) const = 0;
  virtual std::string name() const = 0;
};

struct ObjectiveSpec {
  Level level = Level::subject;
  FomSpec fom = {FomSpec::Kind::auc, std::nullopt};
  AggregationRule aggregation;  // subject-level scoring, used for aux FoMs too
  int folds = 5;
};

struct ObjectiveValue {
  double loss;
  std::map<std::string, double> aux_foms;  // always carries object_auc and subject_auc
};

// Pools per-fold validation scores (z-scale aligned per fold; folds with
// zero control spread pass through unaligned), aggregates to subject level
// when requested, and returns loss = 1 - fom(pooled).
ObjectiveValue cv_objective(const ModelAdapter& adapter, const ObjectiveSpec& spec,
                            const ParamMap& params, uint64_t seed);

// ---- search loop -----------------------------------------------------------

using ObjectiveFn =
    std::function<ObjectiveValue(const ParamMap& params, uint64_t seed)>;
using TrialCallback = std::function<void(const Trial&)>;

// Runs budget trials. Trial i derives its rng streams from (seed, i), so a
// serial run is bit-reproducible. Random-strategy trials run concurrently
// when jobs != 1 with identical results; TPE is sequential by construction.
// on_trial fires in index order as trials are finalized.
TrialLedger run_search(const ObjectiveFn& objective, const SearchSpace& space, int budget,
                       Strategy strategy, uint64_t seed, int jobs = 1,
                       const TrialCallback& on_trial = {}, const TpeConfig& tpe = {},
                       const std::string& objective_descr = "");

TrialLedger run_search(const ModelAdapter& adapter, const ObjectiveSpec& spec,
                       const SearchSpace& space, int budget, Strategy strategy, uint64_t seed,
                       int jobs = 1, const TrialCallback& on_trial = {});

// ---- analysis --------------------------------------------------------------

struct LedgerAnalysis {
  struct Row {
    int trial_index;
    double driving_fom;  // 1 - loss
    double object_auc;
    double subject_auc;
  };
  std::vector<Row> sorted_by_driving;  // ascending driving FoM
  std::vector<Row> by_trial;           // original trial order (scatter data)
  double spearman;                     // rank correlation object vs subject AUC
};

LedgerAnalysis ledger_analysis(const TrialLedger& ledger);

// Spearman rank correlation with average ranks for ties; 0 when either side
// has zero rank variance.
double spearman_rank_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace clinfom
