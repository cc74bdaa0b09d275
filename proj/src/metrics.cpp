#include "clinfom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "clinfom/error.hpp"

namespace clinfom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCeClip = 1e-12;

struct ClassCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

ClassCounts check_classes(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size())
    throw Error(Errc::length_mismatch, std::to_string(labels.size()) + " labels vs " +
                                           std::to_string(scores.size()) + " scores");
  ClassCounts counts;
  for (int label : labels) (label == 1 ? counts.positives : counts.negatives)++;
  if (counts.positives == 0 || counts.negatives == 0)
    throw Error(Errc::degenerate_classes,
                "need both classes, got " + std::to_string(counts.positives) + " positive / " +
                    std::to_string(counts.negatives) + " negative");
  return counts;
}

double trapezoid_area(const std::vector<RocPoint>& points) {
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i)
    area += (points[i + 1].fpr - points[i].fpr) * 0.5 * (points[i + 1].tpr + points[i].tpr);
  return area;
}

}  // namespace

RocCurve roc_curve(std::span<const int> labels, std::span<const double> scores) {
  const auto counts = check_classes(labels, scores);

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.push_back({0.0, 0.0, kInf});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    // All records tied at this score change classification together.
    for (; i < order.size() && scores[order[i]] == threshold; ++i)
      (labels[order[i]] == 1 ? tp : fp)++;
    roc.points.push_back({static_cast<double>(fp) / counts.negatives,
                          static_cast<double>(tp) / counts.positives, threshold});
  }
  return roc;
}

double auc(const RocCurve& roc) { return trapezoid_area(roc.points); }

double auc(std::span<const int> labels, std::span<const double> scores) {
  return auc(roc_curve(labels, scores));
}

double sliver_auc_at_max_fpr(std::span<const int> labels, std::span<const double> scores,
                             double max_fpr) {
  const RocCurve roc = roc_curve(labels, scores);
  std::vector<RocPoint> sliver;
  for (const auto& p : roc.points)
    if (p.fpr <= max_fpr) sliver.push_back(p);
  // Horizontal extension to the sliver boundary at the last retained tpr.
  sliver.push_back({max_fpr, sliver.back().tpr, sliver.back().threshold});
  return trapezoid_area(sliver) / max_fpr;
}

double sliver_auc(std::span<const int> labels, std::span<const double> scores, int target_spec) {
  if (target_spec < 1 || target_spec > 99)
    throw Error(Errc::bad_sliver_spec,
                "target_spec must be in 1..99, got " + std::to_string(target_spec));
  return sliver_auc_at_max_fpr(labels, scores, (100 - target_spec) / 100.0);
}

SensAtSpec sens_at_spec(std::span<const int> labels, std::span<const double> scores,
                        double target_spec_pct) {
  if (!(target_spec_pct > 0.0) || target_spec_pct > 100.0)
    throw Error(Errc::bad_param, "target specificity percentage must be in (0, 100]");
  const auto counts = check_classes(labels, scores);
  const double target = target_spec_pct / 100.0;

  // Candidate thresholds are the distinct scores; specificity is
  // non-decreasing in the threshold, so the lowest qualifying threshold
  // carries the maximum sensitivity.
  std::vector<double> distinct(scores.begin(), scores.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  for (double threshold : distinct) {
    std::size_t tn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == 0 && scores[i] < threshold) ++tn;
    if (static_cast<double>(tn) / counts.negatives >= target) {
      std::size_t tp = 0;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == 1 && scores[i] >= threshold) ++tp;
      return {static_cast<double>(tp) / counts.positives, threshold};
    }
  }
  return {0.0, kInf};
}

TwoSidedStd two_sided_std(std::span<const double> values, std::optional<double> middle) {
  if (values.size() <= 1)
    throw Error(Errc::too_few_samples,
                "two_sided_std needs at least 2 values, got " + std::to_string(values.size()));
  const double m = middle ? *middle : median(values);

  // Mirroring {x} across 0 gives mean 0, so the population std reduces to the
  // root mean square of the retained side.
  double sum_sq_right = 0.0, sum_sq_left = 0.0;
  std::size_t n_right = 0, n_left = 0;
  for (double v : values) {
    const double d = v - m;
    if (d >= 0.0) {
      sum_sq_right += d * d;
      ++n_right;
    }
    if (d <= 0.0) {
      sum_sq_left += d * d;
      ++n_left;
    }
  }
  const double right = n_right > 0 ? std::sqrt(sum_sq_right / n_right) : 0.0;
  const double left = n_left > 0 ? std::sqrt(sum_sq_left / n_left) : 0.0;
  return {right, left, m};
}

double fisher_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw Error(Errc::too_few_samples, "fisher_distance needs at least 2 values per sample");
  const double mean_a = mean(a);
  const double mean_b = mean(b);
  const TwoSidedStd std_a = two_sided_std(a);
  const TwoSidedStd std_b = two_sided_std(b);
  // Facing sides: each sample contributes the spread on the side facing the
  // other sample.
  const double sigma_a = mean_a <= mean_b ? std_a.right : std_a.left;
  const double sigma_b = mean_a <= mean_b ? std_b.left : std_b.right;
  if (sigma_a + sigma_b == 0.0)
    throw Error(Errc::zero_spread, "facing-side spreads are both zero");
  return std::abs(mean_a - mean_b) / (sigma_a + sigma_b);
}

double balanced_cross_entropy(std::span<const int> labels, std::span<const double> scores) {
  check_classes(labels, scores);
  double sum_pos = 0.0, sum_neg = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double s = scores[i];
    if (s < 0.0 || s > 1.0)
      throw Error(Errc::score_out_of_range,
                  "balanced_cross_entropy needs scores in [0,1], got " + std::to_string(s));
    if (labels[i] == 1) {
      sum_pos += std::log(std::max(s, kCeClip));
      ++n_pos;
    } else {
      sum_neg += std::log(std::max(1.0 - s, kCeClip));
      ++n_neg;
    }
  }
  return -0.5 * (sum_pos / n_pos + sum_neg / n_neg);
}

double median(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double mean(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / values.size();
}

}  // namespace clinfom
