#ifndef CRYPTOCATCH_SELECT_HPP
#define CRYPTOCATCH_SELECT_HPP

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cryptocatch/dataset.hpp"

namespace cryptocatch {

struct FeatureSignificance {
  double p = 1.0;
  double p_adj = 1.0;
  bool selected = false;
};

using SignificanceReport = std::vector<FeatureSignificance>;

struct RankedFeature {
  std::string name;
  double score = 0.0;
};

/// Descending by score; ties alphabetical.
using ImportanceRanking = std::vector<RankedFeature>;

/// Two-sided Mann-Whitney U p-value (normal approximation with tie and
/// continuity corrections). Labels are 0/1; both classes must be present.
double univariate_pvalue(const Eigen::Ref<const Eigen::VectorXd>& column,
                         const std::vector<int>& labels);

/// Step-up adjusted p-values in input order; selected where adjusted < alpha.
SignificanceReport benjamini_hochberg(const std::vector<double>& pvalues, double alpha = 0.01);

struct SelectionResult {
  std::vector<std::string> selected;
  SignificanceReport report;  // one entry per matrix column
};

/// BH-controlled univariate selection. Labels with more than two distinct
/// values are tested one-vs-rest; a feature's adjusted p is its minimum
/// across classes.
SelectionResult select_features(const FeatureMatrix& m, const std::vector<int>& labels,
                                double alpha = 0.01);

void sort_ranking(ImportanceRanking& ranking);
std::vector<std::string> top_k_by_importance(const ImportanceRanking& ranking, std::size_t k);

}  // namespace cryptocatch

#endif  // CRYPTOCATCH_SELECT_HPP
