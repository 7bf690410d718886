#include <gtest/gtest.h>

#include <random>

#include "checks.hpp"
#include "cryptocatch/metrics.hpp"

using namespace cryptocatch;

TEST(Confusion, HandCounts) {
  std::vector<ScoredSample> s;
  for (int i = 0; i < 99; ++i) s.push_back({0.9, true});
  s.push_back({0.9, false});
  s.push_back({0.1, true});
  for (int i = 0; i < 5; ++i) s.push_back({0.1, false});
  const auto c = confusion_and_prf(s, 0.5);
  EXPECT_EQ(c.tp, 99u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_EQ(c.tn, 5u);
  EXPECT_NEAR(c.precision, 0.99, 1e-12);
  EXPECT_NEAR(c.recall, 0.99, 1e-12);
  EXPECT_NEAR(c.f1, 0.99, 1e-12);
}

TEST(Confusion, StrictThresholdAndEmptyConventions) {
  const std::vector<ScoredSample> s{{0.5, true}, {0.7, false}, {0.99, true}};
  const auto at_half = confusion_and_prf(s, 0.5);
  EXPECT_EQ(at_half.tp, 1u);  // 0.5 is not above 0.5
  const auto top = confusion_and_prf(s, 1.0);
  EXPECT_EQ(top.tp + top.fp, 0u);
  EXPECT_EQ(top.precision, 0.0);
  EXPECT_EQ(top.f1, 0.0);
  EXPECT_THROW(confusion_and_prf({}, 0.5), std::invalid_argument);
}

TEST(Confusion, RandomSetsMatchCounting) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto s = checks::random_scores(rng);
    const auto grid = checks::brute_grid(s);
    for (const auto& g : grid) {
      const auto c = confusion_and_prf(s, g.t);
      EXPECT_DOUBLE_EQ(c.precision, g.precision);
      EXPECT_DOUBLE_EQ(c.recall, g.recall);
    }
  }
}

TEST(Roc, SeparatedAndConstant) {
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<ScoredSample>{{0.9, true}, {0.8, true}, {0.1, false}}).auc, 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<ScoredSample>{{0.4, true}, {0.4, false}, {0.4, false}}).auc, 0.5);
  EXPECT_THROW(roc_auc(std::vector<ScoredSample>{{0.4, true}}), std::invalid_argument);
}

TEST(Roc, MatchesPairwiseOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto s = checks::random_scores(rng);
    std::vector<double> pos, neg;
    for (const auto& x : s) (x.truth ? pos : neg).push_back(x.score);
    const auto roc = roc_auc(s);
    EXPECT_NEAR(roc.auc, oracle::roc_auc_pairwise(pos, neg), 1e-9);
    EXPECT_EQ(roc.points.front().fpr, 0.0);
    EXPECT_EQ(roc.points.back().tpr, 1.0);
  }
}

TEST(Mlogloss, KnownValues) {
  const std::vector<int> labels{0, 1, 2, 1};
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(4, 3);
  for (int i = 0; i < 4; ++i) onehot(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  EXPECT_LE(mlogloss(MulticlassEvalBatch::from_labels(labels, onehot)), 1e-14);
  for (int m = 2; m <= 9; ++m) {
    std::vector<int> l(30);
    for (int i = 0; i < 30; ++i) l[static_cast<std::size_t>(i)] = i % m;
    const Eigen::MatrixXd uni = Eigen::MatrixXd::Constant(30, m, 1.0 / m);
    EXPECT_NEAR(mlogloss(MulticlassEvalBatch::from_labels(l, uni)), std::log(double(m)), 1e-12);
  }
}

TEST(Mlogloss, MatchesDoubleLoop) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int t = 0; t < 50; ++t) {
    const int n = 40, k = 5;
    Eigen::MatrixXd p(n, k);
    std::vector<int> l(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) p(i, j) = u(rng);
      p.row(i) /= p.row(i).sum();
      l[static_cast<std::size_t>(i)] = static_cast<int>(rng() % k);
    }
    double want = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) want -= (l[static_cast<std::size_t>(i)] == j ? 1.0 : 0.0) * std::log(p(i, j));
    want /= n;
    EXPECT_NEAR(mlogloss(MulticlassEvalBatch::from_labels(l, p)), want, 1e-12);
  }
}

TEST(Sweep, GridAndMonotoneRecall) {
  std::mt19937_64 rng(7);
  const auto s = checks::random_scores(rng);
  const auto table = sweep_thresholds(s, 0.01);
  ASSERT_EQ(table.size(), 101u);
  EXPECT_DOUBLE_EQ(table.front().threshold, 0.0);
  EXPECT_DOUBLE_EQ(table.back().threshold, 1.0);
  for (std::size_t i = 1; i < table.size(); ++i) EXPECT_LE(table[i].recall, table[i - 1].recall);
  for (const auto& row : table) EXPECT_EQ(row.f1, confusion_and_prf(s, row.threshold).f1);
  EXPECT_THROW(sweep_thresholds({}, 0.01), std::invalid_argument);
}

TEST(Sweep, AllPositivesScoredOne) {
  const std::vector<ScoredSample> s{{1.0, true}, {1.0, true}, {0.0, false}};
  for (const auto& row : sweep_thresholds(s, 0.01))
    if (row.threshold < 1.0) {
      EXPECT_EQ(row.recall, 1.0);
    }
}

TEST(Policy, SteepCurveAnchor) {
  // Coarse F1 curve: peak 0.972 at 0.42,
  // recall 0.99 at 0.20 with F1 above 0.99 * 0.972.
  std::vector<SweepRow> table;
  for (int i = 0; i <= 100; ++i) {
    const double t = i / 100.0;
    SweepRow r{t, 0.9, 0.9, 0.9};
    if (i == 42) r = {t, 0.975, 0.969, 0.972};
    if (i == 20) r = {t, 0.936, 0.99, 0.9623};
    if (i == 10) r = {t, 0.90, 0.995, 0.945};
    table.push_back(r);
  }
  const auto f1 = pick_threshold(table, PolicyKind::optimal_f1);
  EXPECT_DOUBLE_EQ(f1.threshold, 0.42);
  EXPECT_DOUBLE_EQ(f1.max_f1, 0.972);
  const auto sens = pick_threshold(table, PolicyKind::optimal_sensitivity, 0.99);
  EXPECT_DOUBLE_EQ(sens.threshold, 0.20);
  EXPECT_DOUBLE_EQ(sens.recall, 0.99);
  EXPECT_GE(sens.f1, 0.972 * 0.99);
}

TEST(Policy, FlatTableTakesLowestThreshold) {
  std::vector<SweepRow> table;
  for (int i = 0; i <= 10; ++i) table.push_back({i / 10.0, 0.5, 0.5, 0.5});
  EXPECT_EQ(pick_threshold(table, PolicyKind::optimal_f1).threshold, 0.0);
  EXPECT_EQ(pick_threshold(table, PolicyKind::optimal_sensitivity).threshold, 0.0);
}

TEST(Policy, MatchesBruteForceGrid) {
  const auto r = checks::threshold_policies(8, 200);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(Policy, Names) {
  EXPECT_EQ(parse_policy("f1"), PolicyKind::optimal_f1);
  EXPECT_EQ(parse_policy("sensitivity"), PolicyKind::optimal_sensitivity);
  EXPECT_FALSE(parse_policy("recall"));
}
