#include "clinfom/fold_align.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include <json.hpp>

#include "clinfom/error.hpp"
#include "clinfom/metrics.hpp"

namespace clinfom {

AlignmentModel fit_alignment(const ScoreTable& table, const CanonicalScale& canonical) {
  if (!(canonical.std > 0.0))
    throw Error(Errc::bad_param, "canonical std must be > 0");
  if (table.records.empty() || !table.has_fold())
    throw Error(Errc::missing_folds, "alignment needs a table with fold assignments");

  std::map<int, std::vector<double>> controls_by_fold;
  for (const auto& rec : table.records) {
    if (!rec.fold) throw Error(Errc::missing_folds, "record without fold assignment");
    if (rec.label == 0) controls_by_fold[*rec.fold].push_back(rec.score);
    else controls_by_fold.try_emplace(*rec.fold);
  }

  AlignmentModel model;
  model.canonical = canonical;
  for (const auto& [fold, controls] : controls_by_fold) {
    if (controls.size() < 2)
      throw Error(Errc::too_few_controls, "fold " + std::to_string(fold) + " has " +
                                              std::to_string(controls.size()) +
                                              " control(s), need >= 2");
    const TwoSidedStd spread = two_sided_std(controls);
    if (spread.right == 0.0 || spread.left == 0.0)
      throw Error(Errc::zero_spread,
                  "fold " + std::to_string(fold) + " controls have zero spread on one side");
    model.per_fold[fold] = {fold, spread.middle, spread.right, spread.left,
                            static_cast<int>(controls.size())};
  }
  return model;
}

double apply_alignment_to_score(double score, const FoldParams& fold,
                                const CanonicalScale& canonical) {
  const double d = score - fold.median;
  if (d > 0.0) return canonical.median + canonical.std * d / fold.right_std;
  if (d < 0.0) return canonical.median + canonical.std * d / fold.left_std;
  return canonical.median;
}

ScoreTable apply_alignment(const ScoreTable& table, const AlignmentModel& model, bool clip) {
  ScoreTable out = table;
  for (auto& rec : out.records) {
    if (!rec.fold) throw Error(Errc::missing_folds, "record without fold assignment");
    auto it = model.per_fold.find(*rec.fold);
    if (it == model.per_fold.end())
      throw Error(Errc::unknown_fold, "fold " + std::to_string(*rec.fold) + " not in model");
    rec.score = apply_alignment_to_score(rec.score, it->second, model.canonical);
    if (clip) rec.score = std::clamp(rec.score, 0.0, 1.0);
  }
  return out;
}

std::string alignment_model_to_json(const AlignmentModel& model) {
  nlohmann::json canonical;
  canonical["median"] = model.canonical.median;
  canonical["std"] = model.canonical.std;
  if (model.canonical.left_std) canonical["left_std"] = *model.canonical.left_std;

  nlohmann::json folds = nlohmann::json::array();
  for (const auto& [_, p] : model.per_fold) {
    folds.push_back({{"fold", p.fold},
                     {"median", p.median},
                     {"right_std", p.right_std},
                     {"left_std", p.left_std},
                     {"n_controls", p.n_controls}});
  }
  return nlohmann::json{{"canonical", canonical}, {"folds", folds}}.dump(2) + "\n";
}

AlignmentModel alignment_model_from_json(const std::string& text) {
  AlignmentModel model;
  try {
    const auto obj = nlohmann::json::parse(text);
    const auto& canonical = obj.at("canonical");
    model.canonical.median = canonical.at("median").get<double>();
    model.canonical.std = canonical.at("std").get<double>();
    if (canonical.contains("left_std"))
      model.canonical.left_std = canonical.at("left_std").get<double>();
    for (const auto& f : obj.at("folds")) {
      FoldParams p{f.at("fold").get<int>(), f.at("median").get<double>(),
                   f.at("right_std").get<double>(), f.at("left_std").get<double>(),
                   f.at("n_controls").get<int>()};
      if (!model.per_fold.emplace(p.fold, p).second)
        throw Error(Errc::malformed_input, "duplicate fold " + std::to_string(p.fold));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_input, std::string("alignment model JSON: ") + e.what());
  }
  if (!(model.canonical.std > 0.0))
    throw Error(Errc::malformed_input, "canonical std must be > 0");
  return model;
}

}  // namespace clinfom
