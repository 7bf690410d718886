#include "cryptocatch/metrics.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <stdexcept>

namespace cryptocatch {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Confusion confusion_and_prf(std::span<const ScoredSample> samples, double threshold) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold outside [0,1]");
  Confusion c;
  for (const auto& s : samples) {
    const bool pred = s.score > threshold;
    if (pred && s.truth) ++c.tp;
    else if (pred) ++c.fp;
    else if (s.truth) ++c.fn;
    else ++c.tn;
  }
  c.precision = ratio(c.tp, c.tp + c.fp);
  c.recall = ratio(c.tp, c.tp + c.fn);
  c.f1 = c.precision + c.recall > 0.0
             ? 2.0 * c.precision * c.recall / (c.precision + c.recall)
             : 0.0;
  return c;
}

RocCurve roc_auc(std::span<const ScoredSample> samples) {
  std::size_t pos = 0;
  for (const auto& s : samples) pos += s.truth ? 1 : 0;
  const std::size_t neg = samples.size() - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("ROC needs both classes");

  std::vector<ScoredSample> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredSample& a, const ScoredSample& b) { return a.score > b.score; });

  RocCurve roc;
  roc.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double cut = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == cut) {
      (sorted[i].truth ? tp : fp) += 1;
      ++i;
    }
    const RocPoint next{cut, ratio(fp, neg), ratio(tp, pos)};
    const RocPoint& prev = roc.points.back();
    roc.auc += (next.fpr - prev.fpr) * (next.tpr + prev.tpr) / 2.0;
    roc.points.push_back(next);
  }
  return roc;
}

MulticlassEvalBatch MulticlassEvalBatch::from_labels(const std::vector<int>& labels,
                                                     const Eigen::MatrixXd& proba) {
  if (static_cast<Eigen::Index>(labels.size()) != proba.rows())
    throw std::invalid_argument("label count does not match probability rows");
  MulticlassEvalBatch b;
  b.proba = proba;
  b.truth = Eigen::MatrixXd::Zero(proba.rows(), proba.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= proba.cols()) throw std::out_of_range("label index");
    b.truth(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return b;
}

double mlogloss(const MulticlassEvalBatch& batch, double eps) {
  const auto n = batch.truth.rows();
  if (n == 0) return 0.0;
  const Eigen::ArrayXXd clipped = batch.proba.array().max(eps).min(1.0 - eps);
  return -(batch.truth.array() * clipped.log()).sum() / static_cast<double>(n);
}

double accuracy(const std::vector<int>& labels, const Eigen::MatrixXd& proba) {
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Eigen::Index arg = 0;
    proba.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
    hit += arg == labels[i] ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

std::vector<double> threshold_grid(double step) {
  if (!(step > 0.0 && step <= 0.5)) throw std::invalid_argument("grid step must be in (0, 0.5]");
  std::vector<double> grid;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * step;
    if (t >= 1.0 - 1e-9) {
      grid.push_back(1.0);
      break;
    }
    // Round to the grid's decimal resolution so 0.07 prints and compares as 0.07.
    grid.push_back(std::round(t * 1e9) / 1e9);
  }
  return grid;
}

std::vector<SweepRow> sweep_thresholds(std::span<const ScoredSample> samples, double step) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  std::vector<SweepRow> table;
  for (double t : threshold_grid(step)) {
    const auto c = confusion_and_prf(samples, t);
    table.push_back({t, c.precision, c.recall, c.f1});
  }
  return table;
}

std::string_view to_string(PolicyKind k) {
  return k == PolicyKind::optimal_f1 ? "f1" : "sensitivity";
}

std::optional<PolicyKind> parse_policy(std::string_view s) {
  if (s == "f1" || s == "optimal_f1") return PolicyKind::optimal_f1;
  if (s == "sensitivity" || s == "optimal_sensitivity") return PolicyKind::optimal_sensitivity;
  return std::nullopt;
}

ThresholdPolicy pick_threshold(std::span<const SweepRow> table, PolicyKind kind,
                               double f1_floor_ratio) {
  if (table.empty()) throw std::invalid_argument("empty threshold table");
  if (!(f1_floor_ratio > 0.0 && f1_floor_ratio <= 1.0))
    throw std::invalid_argument("floor ratio must be in (0,1]");

  const SweepRow* best_f1 = &table[0];
  for (const auto& row : table) {
    if (row.f1 > best_f1->f1 || (row.f1 == best_f1->f1 && row.threshold < best_f1->threshold))
      best_f1 = &row;
  }
  const SweepRow* chosen = best_f1;
  if (kind == PolicyKind::optimal_sensitivity) {
    const double floor = f1_floor_ratio * best_f1->f1;
    chosen = nullptr;
    for (const auto& row : table) {
      if (row.f1 < floor) continue;
      if (!chosen || row.recall > chosen->recall ||
          (row.recall == chosen->recall &&
           (row.f1 > chosen->f1 || (row.f1 == chosen->f1 && row.threshold < chosen->threshold))))
        chosen = &row;
    }
  }
  ThresholdPolicy p;
  p.kind = kind;
  p.f1_floor_ratio = f1_floor_ratio;
  p.threshold = chosen->threshold;
  p.precision = chosen->precision;
  p.recall = chosen->recall;
  p.f1 = chosen->f1;
  p.max_f1 = best_f1->f1;
  return p;
}

}  // namespace cryptocatch
