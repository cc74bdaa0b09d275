#pragma once

#include <optional>
#include <span>
#include <vector>

namespace clinfom {

struct RocPoint {
  double fpr;
  double tpr;
  double threshold;
};

// Ordered operating points from (0,0) to (1,1), thresholds strictly
// decreasing (the (0,0) anchor carries +inf). Records with equal scores
// cross the threshold together.
struct RocCurve {
  std::vector<RocPoint> points;
};

// Right/left spreads from mirroring samples across the middle value.
struct TwoSidedStd {
  double right;
  double left;
  double middle;
};

struct DistributionSummary {
  double mean;
  TwoSidedStd two_sided;
  std::size_t n;
};

RocCurve roc_curve(std::span<const int> labels, std::span<const double> scores);

// Trapezoidal area; equals pairwise concordance with ties counted 1/2.
double auc(const RocCurve& roc);
double auc(std::span<const int> labels, std::span<const double> scores);

// Normalized partial AUC over FPR in [0, (100 - target_spec)/100].
// target_spec must lie in 1..99.
double sliver_auc(std::span<const int> labels, std::span<const double> scores, int target_spec);

// Unvalidated building block used by sliver_auc; max_fpr = 1 recovers auc.
double sliver_auc_at_max_fpr(std::span<const int> labels, std::span<const double> scores,
                             double max_fpr);

struct SensAtSpec {
  double sensitivity;
  double threshold;  // +inf when only the all-negative threshold qualifies
};

// Best sensitivity over thresholds keeping specificity >= target_spec_pct/100,
// with the loosest qualifying threshold. Sensitivity counts score >= t,
// specificity counts score < t.
SensAtSpec sens_at_spec(std::span<const int> labels, std::span<const double> scores,
                        double target_spec_pct);

// Population std devs of samples mirrored across the middle (median unless
// supplied). A side with no samples beyond the middle reports spread 0.
TwoSidedStd two_sided_std(std::span<const double> values,
                          std::optional<double> middle = std::nullopt);

// |mean(a) - mean(b)| / (sigma_a + sigma_b) with the facing-sides convention:
// the lower-mean sample contributes its right-hand spread, the higher-mean
// sample its left-hand spread.
double fisher_distance(std::span<const double> a, std::span<const double> b);

// Per-class mean cross-entropy averaged over the two classes; probabilities
// clipped at 1e-12.
double balanced_cross_entropy(std::span<const int> labels, std::span<const double> scores);

double median(std::span<const double> values);
double mean(std::span<const double> values);

}  // namespace clinfom
