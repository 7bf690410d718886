#ifndef CRYPTOCATCH_METRICS_HPP
#define CRYPTOCATCH_METRICS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cryptocatch {

struct ScoredSample {
  double score = 0.0;
  bool truth = false;  // mining = positive
};

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Positive iff score > threshold. Undefined ratios are reported as 0.
Confusion confusion_and_prf(std::span<const ScoredSample> samples, double threshold);

struct RocPoint {
  double threshold = 0.0;  // predictions are positive for score >= threshold
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) to (1,1)
  double auc = 0.0;
};

RocCurve roc_auc(std::span<const ScoredSample> samples);

/// One-hot truth and predicted probabilities, one row per sample.
struct MulticlassEvalBatch {
  Eigen::MatrixXd truth;
  Eigen::MatrixXd proba;

  static MulticlassEvalBatch from_labels(const std::vector<int>& labels,
                                         const Eigen::MatrixXd& proba);
};

double mlogloss(const MulticlassEvalBatch& batch, double eps = 1e-15);

double accuracy(const std::vector<int>& labels, const Eigen::MatrixXd& proba);

struct SweepRow {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Thresholds 0, step, ..., 1 inclusive.
std::vector<double> threshold_grid(double step = 0.01);
std::vector<SweepRow> sweep_thresholds(std::span<const ScoredSample> samples, double step = 0.01);

enum class PolicyKind { optimal_f1, optimal_sensitivity };
std::string_view to_string(PolicyKind k);
std::optional<PolicyKind> parse_policy(std::string_view s);

struct ThresholdPolicy {
  PolicyKind kind = PolicyKind::optimal_f1;
  double f1_floor_ratio = 0.99;
  double threshold = 0.5;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double max_f1 = 0.0;
};

/// optimal_f1: argmax F1, smallest threshold on ties.
/// optimal_sensitivity: among rows with F1 >= ratio * max F1, maximize recall,
/// then F1, then prefer the smaller threshold.
ThresholdPolicy pick_threshold(std::span<const SweepRow> table, PolicyKind kind,
                               double f1_floor_ratio = 0.99);

}  // namespace cryptocatch

#endif  // CRYPTOCATCH_METRICS_HPP
