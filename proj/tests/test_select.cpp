#include <gtest/gtest.h>

#include <random>

#include "checks.hpp"
#include "cryptocatch/select.hpp"

using namespace cryptocatch;

namespace {

// Exact two-sided permutation p-value of the rank-sum statistic.
double permutation_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> all = a;
  all.insert(all.end(), b.begin(), b.end());
  const std::size_t n = all.size(), na = a.size();
  auto u_of = [&](const std::vector<bool>& in_a) {
    double u = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (in_a[i] && !in_a[j]) u += all[i] > all[j] ? 1.0 : (all[i] == all[j] ? 0.5 : 0.0);
    return u;
  };
  std::vector<bool> obs(n, false);
  for (std::size_t i = 0; i < na; ++i) obs[i] = true;
  const double mean = static_cast<double>(na * (n - na)) / 2.0;
  const double dev = std::fabs(u_of(obs) - mean);
  int extreme = 0, total = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != na) continue;
    std::vector<bool> in_a(n);
    for (std::size_t i = 0; i < n; ++i) in_a[i] = (mask >> i) & 1u;
    ++total;
    extreme += std::fabs(u_of(in_a) - mean) >= dev - 1e-12;
  }
  return static_cast<double>(extreme) / total;
}

double pvalue(const std::vector<double>& a, const std::vector<double>& b) {
  Eigen::VectorXd col(static_cast<Eigen::Index>(a.size() + b.size()));
  std::vector<int> y;
  Eigen::Index i = 0;
  for (double v : a) {
    col[i++] = v;
    y.push_back(0);
  }
  for (double v : b) {
    col[i++] = v;
    y.push_back(1);
  }
  return univariate_pvalue(col, y);
}

FeatureMatrix noise_matrix(std::mt19937_64& rng, int rows, int cols, std::vector<int>& y) {
  std::normal_distribution<double> z(0.0, 1.0);
  FeatureMatrix m;
  m.values.resize(rows, cols);
  for (int j = 0; j < cols; ++j) m.names.push_back("noise_" + std::to_string(j));
  y.assign(static_cast<std::size_t>(rows), 0);
  for (int i = 0; i < rows; ++i) {
    y[static_cast<std::size_t>(i)] = i % 2;
    m.ids.push_back(std::to_string(i));
    m.labels.push_back(std::nullopt);
    for (int j = 0; j < cols; ++j) m.values(i, j) = z(rng);
  }
  return m;
}

}  // namespace

TEST(MannWhitney, PerfectSeparation) {
  EXPECT_LT(pvalue(std::vector<double>(20, 0.0), std::vector<double>(20, 1.0)), 1e-6);
}

TEST(MannWhitney, IdenticalDistributions) {
  const std::vector<double> v{1, 2, 3, 4, 5, 6};
  EXPECT_GT(pvalue(v, v), 0.5);
}

TEST(MannWhitney, ConstantColumnIsOne) {
  EXPECT_EQ(pvalue({3, 3, 3}, {3, 3}), 1.0);
}

TEST(MannWhitney, SeparatedFourByFourNearExactPermutation) {
  const std::vector<double> a{1, 2, 3, 4}, b{5, 6, 7, 8};
  EXPECT_NEAR(pvalue(a, b), permutation_pvalue(a, b), 0.02);
}

// The normal approximation is coarse at 4 vs 4; its error peaks at U = 4
// (0.031) and stays small wherever the exact p is at most 0.2.
TEST(MannWhitney, FourByFourApproximationError) {
  const std::vector<double> pool{1, 2, 3, 4, 5, 6, 7, 8};
  double worst = 0, worst_tail = 0;
  for (unsigned mask = 0; mask < 256; ++mask) {
    if (__builtin_popcount(mask) != 4) continue;
    std::vector<double> a, b;
    for (unsigned i = 0; i < 8; ++i) ((mask >> i) & 1u ? a : b).push_back(pool[i]);
    const double exact = permutation_pvalue(a, b);
    const double err = std::fabs(pvalue(a, b) - exact);
    worst = std::max(worst, err);
    if (exact <= 0.2) worst_tail = std::max(worst_tail, err);
  }
  EXPECT_LE(worst, 0.035);
  EXPECT_LE(worst_tail, 0.01);
}

TEST(MannWhitney, ScaleInvariant) {
  const std::vector<double> a{1.5, 2.2, 6.1, 3.3}, b{4.8, 5.1, 2.9, 7.7};
  std::vector<double> a2, b2;
  for (double v : a) a2.push_back(v * 37.0);
  for (double v : b) b2.push_back(v * 37.0);
  EXPECT_EQ(pvalue(a, b), pvalue(a2, b2));
}

TEST(MannWhitney, SingleClassIsError) {
  Eigen::VectorXd col(3);
  col << 1, 2, 3;
  EXPECT_THROW(univariate_pvalue(col, {1, 1, 1}), std::invalid_argument);
}

TEST(BenjaminiHochberg, HandComputed) {
  const auto r = benjamini_hochberg({0.001, 0.002, 0.03, 0.5}, 0.01);
  const double want[] = {0.004, 0.004, 0.04, 0.5};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r[i].p_adj, want[i], 1e-15);
  EXPECT_TRUE(r[0].selected);
  EXPECT_TRUE(r[1].selected);
  EXPECT_FALSE(r[2].selected);
  EXPECT_FALSE(r[3].selected);
}

TEST(BenjaminiHochberg, EdgeCases) {
  for (const auto& f : benjamini_hochberg({1, 1, 1})) EXPECT_FALSE(f.selected);
  const auto one = benjamini_hochberg({0.005});
  EXPECT_DOUBLE_EQ(one[0].p_adj, 0.005);
  EXPECT_TRUE(one[0].selected);
  EXPECT_TRUE(benjamini_hochberg({}).empty());
  EXPECT_THROW(benjamini_hochberg({1.5}), std::invalid_argument);
}

TEST(BenjaminiHochberg, MatchesClassicalStepUp) {
  const auto r = checks::bh_vs_step_up(123, 500);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(SelectFeatures, SeparatingColumnAmongNoise) {
  int noise_hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<int> y;
    auto m = noise_matrix(rng, 200, 50, y);
    Matrix with(m.rows(), m.cols() + 1);
    with << m.values, Eigen::VectorXd::NullaryExpr(m.rows(), [&](Eigen::Index i) { return double(y[static_cast<std::size_t>(i)]); });
    m.values = with;
    m.names.push_back("signal");
    const auto sel = select_features(m, y, 0.01);
    EXPECT_NE(std::find(sel.selected.begin(), sel.selected.end(), "signal"), sel.selected.end());
    noise_hits += static_cast<int>(sel.selected.size()) - 1;
    EXPECT_EQ(sel.report.size(), 51u);
  }
  EXPECT_LE(noise_hits, 2);
}

TEST(SelectFeatures, AllNoiseRateBelowAlpha) {
  std::size_t selected = 0, tested = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    std::vector<int> y;
    const auto m = noise_matrix(rng, 60, 20, y);
    selected += select_features(m, y, 0.01).selected.size();
    tested += 20;
  }
  EXPECT_LE(static_cast<double>(selected) / static_cast<double>(tested), 0.01);
}

TEST(SelectFeatures, EmptyMatrix) {
  FeatureMatrix m;
  m.values.resize(4, 0);
  m.ids = {"a", "b", "c", "d"};
  m.labels.assign(4, std::nullopt);
  EXPECT_TRUE(select_features(m, {0, 1, 0, 1}).selected.empty());
}

TEST(SelectFeatures, MulticlassUsesOneVsRest) {
  // Column separates class 2 from the rest only.
  FeatureMatrix m;
  m.names = {"x"};
  m.values.resize(90, 1);
  std::vector<int> y;
  for (int i = 0; i < 90; ++i) {
    y.push_back(i % 3);
    m.values(i, 0) = (i % 3 == 2 ? 10.0 : 0.0) + (i % 7) * 0.01;
    m.ids.push_back(std::to_string(i));
    m.labels.push_back(std::nullopt);
  }
  EXPECT_EQ(select_features(m, y, 0.01).selected, std::vector<std::string>{"x"});
}

TEST(TopK, OrderingAndTies) {
  ImportanceRanking r{{"Friedrich_coefficients", 0.7735}, {"Max_langevin_fixed_point", 0.9182}};
  sort_ranking(r);
  EXPECT_EQ(r.front().name, "Max_langevin_fixed_point");
  EXPECT_EQ(top_k_by_importance(r, 10).size(), 2u);
  ImportanceRanking tie{{"b", 0.5}, {"a", 0.5}, {"c", 0.1}};
  sort_ranking(tie);
  EXPECT_EQ(top_k_by_importance(tie, 2), (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW(top_k_by_importance(tie, 0), std::invalid_argument);
}
