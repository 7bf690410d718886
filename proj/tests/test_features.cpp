#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "checks.hpp"
#include "cryptocatch/features.hpp"

using namespace cryptocatch;
using namespace cryptocatch::features;

namespace {

Series s(std::initializer_list<double> v) {
  Series out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Series constant(int n, double c) { return Series::Constant(n, c); }

}  // namespace

TEST(Features, SumValues) {
  EXPECT_EQ(sum_values(s({2, 3, 5})), 10.0);
  EXPECT_EQ(sum_values(s({0, 0})), 0.0);
}

TEST(Features, MeanNAbsoluteMax) {
  EXPECT_DOUBLE_EQ(mean_n_absolute_max(s({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), 7), 7.0);
  EXPECT_DOUBLE_EQ(mean_n_absolute_max(s({-5, 2}), 7), 3.5);
  EXPECT_DOUBLE_EQ(mean_n_absolute_max(constant(6, -4.0), 7), 4.0);
}

TEST(Features, C3) {
  EXPECT_DOUBLE_EQ(c3(constant(6, 1.0), 1), 1.0);
  EXPECT_TRUE(is_missing(c3(s({1, 2, 3, 4}), 2)));
}

TEST(Features, BinnedEntropy) {
  EXPECT_DOUBLE_EQ(binned_entropy(constant(7, 3.0), 10), 0.0);
  EXPECT_NEAR(binned_entropy(s({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}), 10), std::log(10.0), 1e-12);
}

TEST(Features, IndexMassQuantile) {
  EXPECT_DOUBLE_EQ(index_mass_quantile(constant(10, 2.0), 0.1), 0.1);
  EXPECT_DOUBLE_EQ(index_mass_quantile(s({100, 1, 1, 1}), 0.1), 0.25);
  EXPECT_DOUBLE_EQ(index_mass_quantile(s({3, 1, 4, 1, 5}), 0.999999), 1.0);
  EXPECT_TRUE(is_missing(index_mass_quantile(s({0, 0, 0}), 0.5)));
}

TEST(Features, CwtPeaks) {
  EXPECT_EQ(number_cwt_peaks(s({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), 5), 0.0);
  EXPECT_EQ(number_cwt_peaks(constant(10, 5.0), 5), 0.0);
  EXPECT_TRUE(is_missing(number_cwt_peaks(s({1, 2}), 5)));
  const Series periodic = s({0, 10, 0, 10, 0, 10, 0, 10, 0, 10});
  const double got = number_cwt_peaks(periodic, 5);
  EXPECT_GE(got, 2.0);
  oracle::Vec v(periodic.data(), periodic.data() + periodic.size());
  EXPECT_EQ(got, oracle::number_cwt_peaks(v, 5));
  EXPECT_EQ(got, 3.0);
  EXPECT_EQ(number_cwt_peaks(s({0, 0, 9, 0, 0, 0, 0, 9, 0, 0}), 5), 2.0);
}

TEST(Features, RickerRowsMatchFullConvolution) {
  const oracle::Vec v{3, 1, 4, 1, 5, 9, 2, 6};
  const auto want = oracle::ricker_cwt(v, 5);
  const auto got = ricker_cwt(oracle::to_eigen(v), 5);
  for (int w = 0; w < 5; ++w)
    for (int i = 0; i < 8; ++i) EXPECT_NEAR(got(w, i), want[w][i], 1e-12);
}

TEST(Features, FftCoefficient) {
  EXPECT_DOUBLE_EQ(fft_coefficient(constant(4, 1.0), 0, FftAttr::abs), 4.0);
  const Series alt = s({1, -1, 1, -1});
  EXPECT_NEAR(fft_coefficient(alt, 2, FftAttr::real), 4.0, 1e-12);
  EXPECT_NEAR(fft_coefficient(alt, 1, FftAttr::abs), 0.0, 1e-12);
  EXPECT_TRUE(is_missing(fft_coefficient(alt, 3, FftAttr::real)));
  EXPECT_DOUBLE_EQ(fft_coefficient(s({-1, -1}), 0, FftAttr::angle), 180.0);
}

TEST(Features, Autocorrelation) {
  EXPECT_EQ(autocorrelation(s({1, 5, 2}), 0), 1.0);
  EXPECT_TRUE(is_missing(autocorrelation(constant(5, 2.0), 1)));
}

TEST(Features, ArCoefficientRecoversProcess) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 1e-6);
  Series x(10);
  x[0] = 1.0;
  for (int t = 1; t < 10; ++t) x[t] = 0.8 * x[t - 1] + noise(rng);
  // Order 1 has an intercept and a lag term.
  EXPECT_NEAR(ar_coefficient(x, 1, 1), 0.8, 1e-3);
  EXPECT_TRUE(is_missing(ar_coefficient(constant(8, 2.0), 1, 2)));
}

TEST(Features, BasicStats) {
  const auto b = basic_stats(s({1, 2, 3}));
  EXPECT_DOUBLE_EQ(b.mean, 2.0);
  EXPECT_DOUBLE_EQ(b.variance, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(b.abs_energy, 14.0);
  EXPECT_DOUBLE_EQ(b.mean_abs_change, 1.0);
  EXPECT_DOUBLE_EQ(b.median, 2.0);
  const auto c = basic_stats(constant(4, 7.0));
  EXPECT_EQ(c.std, 0.0);
  EXPECT_EQ(c.mean_abs_change, 0.0);
}

TEST(Features, RollingStats) {
  EXPECT_DOUBLE_EQ(rolling_stats(s({1, 2, 3, 4}), 3).moving_average_last, 3.0);
  EXPECT_EQ(rolling_stats(constant(5, 1.5), 3).sliding_std_max, 0.0);
  EXPECT_TRUE(is_missing(rolling_stats(s({1, 2}), 3).moving_average_last));
}

TEST(Features, FriedrichConstantDrift) {
  // Constant increment: h(v) = 0.5 everywhere.
  Series x(10);
  for (int i = 0; i < 10; ++i) x[i] = 0.5 * i;
  const auto c = friedrich_coefficients(x, 3, 30);
  ASSERT_FALSE(is_missing(c[0]));
  EXPECT_NEAR(c[0], 0.5, 1e-9);
  for (int k = 1; k <= 3; ++k) EXPECT_NEAR(c[k], 0.0, 1e-9);
}

TEST(Features, FriedrichNeedsEnoughBins) {
  // N = 10 gives at most 9 pairs; 3 distinct signal values are too few for m = 3.
  const Series x = s({1, 2, 3, 1, 2, 3, 1, 2, 3, 1});
  EXPECT_LE(drift_bins(x, 30).signal.size(), 9);
  EXPECT_TRUE(is_missing(friedrich_coefficients(x, 3, 30)[0]));
  EXPECT_TRUE(is_missing(max_langevin_fixed_point(x, 3, 30)));
}

TEST(Features, LangevinLinearDrift) {
  // Halving the distance to 1 each step: h(v) = 0.5 * (1 - v), fixed point 1.
  Series x(10);
  x[0] = -7.0;
  for (int i = 1; i < 10; ++i) x[i] = x[i - 1] + 0.5 * (1.0 - x[i - 1]);
  const auto c = friedrich_coefficients(x, 3, 30);
  EXPECT_NEAR(c[0], 0.5, 1e-6);
  EXPECT_NEAR(c[1], -0.5, 1e-6);
  EXPECT_NEAR(max_langevin_fixed_point(x, 3, 30), 1.0, 1e-6);
}

TEST(FeatureOracles, EveryFunctionMatchesItsOracle) {
  for (const auto& r : checks::feature_oracles(99, 100)) {
    EXPECT_TRUE(r.ok()) << r.name << ": " << r.failures << " failures, first " << r.first_failure;
    EXPECT_GE(r.cases, 100) << r.name;
  }
}

TEST(Catalog, NamesRoundTripAndAreUnique) {
  const auto cat = default_catalog();
  EXPECT_EQ(cat.size(), 102u);
  std::set<std::string> names;
  for (const auto& spec : cat) {
    const auto n = spec.name();
    EXPECT_TRUE(names.insert(n).second) << n;
    EXPECT_EQ(FeatureSpec::parse(n), spec) << n;
  }
  EXPECT_TRUE(names.count("c3__lag_1"));
  EXPECT_TRUE(names.count("binned_entropy__max_bins_10"));
  EXPECT_TRUE(names.count("max_langevin_fixed_point__m_3__r_30__iat"));
  EXPECT_THROW(FeatureSpec::parse("no_such_feature"), std::invalid_argument);
  EXPECT_THROW(FeatureSpec::parse("c3__lag_x"), std::invalid_argument);
  EXPECT_THROW(FeatureSpec::parse("c3"), std::invalid_argument);
}

TEST(Extract, TotalAfterImputation) {
  Window w;
  for (int i = 0; i < 10; ++i) w.packets.push_back({i * 0.3 + (i % 3) * 0.01, 40.0 + 7 * (i % 4)});
  const auto cat = default_catalog();
  const auto v = extract(w, cat);
  ASSERT_EQ(v.values.size(), static_cast<Eigen::Index>(cat.size()));
  EXPECT_TRUE(v.values.allFinite());
  EXPECT_EQ(extract(w, cat).values, v.values);
}

TEST(Extract, ShortWindowImputesZero) {
  Window w;
  w.packets = {{0.0, 100.0}, {0.5, 110.0}};
  const auto cat = default_catalog();
  const auto v = extract(w, cat);
  EXPECT_TRUE(v.values.allFinite());
  for (std::size_t i = 0; i < cat.size(); ++i) {
    const Series src = cat[i].iat ? iat_series(w) : length_series(w);
    if (is_missing(cat[i].evaluate(src))) {
      EXPECT_EQ(v.values[static_cast<Eigen::Index>(i)], 0.0) << cat[i].name();
    }
  }
  // c3 with lag 1 needs three points.
  const auto c3_idx = std::find_if(cat.begin(), cat.end(), [](const FeatureSpec& f) { return f.name() == "c3__lag_1"; });
  EXPECT_EQ(v.values[c3_idx - cat.begin()], 0.0);
}
