#include "cryptocatch/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace cryptocatch {

double univariate_pvalue(const Eigen::Ref<const Eigen::VectorXd>& column,
                         const std::vector<int>& labels) {
  const auto n = static_cast<std::size_t>(column.size());
  if (labels.size() != n) throw std::invalid_argument("column/label size mismatch");
  std::size_t n1 = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw std::invalid_argument("labels must be 0/1");
    n1 += static_cast<std::size_t>(l);
  }
  const std::size_t n0 = n - n1;
  if (n0 == 0 || n1 == 0) throw std::invalid_argument("univariate test needs both classes");
  for (Eigen::Index i = 0; i < column.size(); ++i)
    if (!std::isfinite(column[i])) throw std::invalid_argument("non-finite feature value");

  // Mid-ranks with tie groups.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });
  std::vector<double> rank(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && column[order[j + 1]] == column[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  double r1 = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] == 1) r1 += rank[i];
  const double dn1 = static_cast<double>(n1);
  const double dn0 = static_cast<double>(n0);
  const double dn = static_cast<double>(n);
  const double u = r1 - dn1 * (dn1 + 1.0) / 2.0;
  const double mu = dn1 * dn0 / 2.0;
  const double var = dn1 * dn0 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (!(var > 0.0)) return 1.0;
  const double z = std::max(0.0, std::abs(u - mu) - 0.5) / std::sqrt(var);
  return std::clamp(std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
}

SignificanceReport benjamini_hochberg(const std::vector<double>& pvalues, double alpha) {
  const std::size_t m = pvalues.size();
  SignificanceReport report(m);
  if (m == 0) return report;
  for (double p : pvalues)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p-value outside [0,1]");

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
  double running = 1.0;
  for (std::size_t i = m; i-- > 0;) {
    const auto idx = order[i];
    const double scaled = static_cast<double>(m) * pvalues[idx] / static_cast<double>(i + 1);
    running = std::min(running, scaled);
    auto& r = report[idx];
    r.p = pvalues[idx];
    r.p_adj = std::min(1.0, running);
    r.selected = r.p_adj < alpha;
  }
  return report;
}

SelectionResult select_features(const FeatureMatrix& m, const std::vector<int>& labels,
                                double alpha) {
  SelectionResult out;
  if (m.cols() == 0) return out;
  if (static_cast<Eigen::Index>(labels.size()) != m.rows())
    throw std::invalid_argument("label count does not match matrix rows");

  const std::set<int> classes(labels.begin(), labels.end());
  if (classes.size() < 2) throw std::invalid_argument("selection needs at least two classes");

  std::vector<std::vector<int>> problems;
  if (classes.size() == 2 && classes.count(0) && classes.count(1)) {
    problems.push_back(labels);
  } else {
    for (int c : classes) {
      std::vector<int> y(labels.size());
      for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == c ? 1 : 0;
      problems.push_back(std::move(y));
    }
  }

  out.report.assign(static_cast<std::size_t>(m.cols()), FeatureSignificance{1.0, 1.0, false});
  for (const auto& y : problems) {
    std::vector<double> p(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      p[static_cast<std::size_t>(c)] = univariate_pvalue(m.values.col(c), y);
    const auto bh = benjamini_hochberg(p, alpha);
    for (std::size_t c = 0; c < bh.size(); ++c) {
      if (bh[c].p_adj < out.report[c].p_adj ||
          (bh[c].p_adj == out.report[c].p_adj && bh[c].p < out.report[c].p))
        out.report[c] = bh[c];
    }
  }
  for (std::size_t c = 0; c < out.report.size(); ++c) {
    out.report[c].selected = out.report[c].p_adj < alpha;
    if (out.report[c].selected) out.selected.push_back(m.names[c]);
  }
  return out;
}

void sort_ranking(ImportanceRanking& ranking) {
  std::sort(ranking.begin(), ranking.end(), [](const RankedFeature& a, const RankedFeature& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.name < b.name;
  });
}

std::vector<std::string> top_k_by_importance(const ImportanceRanking& ranking, std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  ImportanceRanking sorted = ranking;
  sort_ranking(sorted);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < sorted.size() && i < k; ++i) out.push_back(sorted[i].name);
  return out;
}

}  // namespace cryptocatch
