#ifndef CRYPTOCATCH_FEATURES_HPP
#define CRYPTOCATCH_FEATURES_HPP

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cryptocatch/flow.hpp"

namespace cryptocatch {

using Series = Eigen::VectorXd;
using SeriesRef = Eigen::Ref<const Eigen::VectorXd>;

namespace features {

/// Sentinel for "not computable on this series". Imputed to 0 by extract().
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return v != v; }

double sum_values(const SeriesRef& x);

/// Mean of the min(n, N) largest absolute values.
double mean_n_absolute_max(const SeriesRef& x, int n = 7);

double c3(const SeriesRef& x, int lag);

/// Shannon entropy (nats) of an equal-width histogram over [min, max].
double binned_entropy(const SeriesRef& x, int max_bins = 10);

/// Relative index (i+1)/N where cumulative |x| first reaches q of the total.
double index_mass_quantile(const SeriesRef& x, double q = 0.1);

/// Ricker-wavelet CWT, one row per width 1..max_width. Kernels have odd
/// length, are centred on a sample and span five widths each side; the
/// series is zero-padded.
Eigen::MatrixXd ricker_cwt(const SeriesRef& x, int max_width);

/// Peaks of the width-1 CWT row that persist as a ridge over
/// ceil(max_width/4) consecutive widths and clear the row's 10th percentile
/// of absolute coefficients.
double number_cwt_peaks(const SeriesRef& x, int max_width = 5);

enum class FftAttr { real, imag, abs, angle };
std::string_view to_string(FftAttr a);
std::optional<FftAttr> parse_fft_attr(std::string_view s);

/// Attribute of X_k = sum_n x_n exp(-2 pi i k n / N); angle in degrees, (-180, 180].
double fft_coefficient(const SeriesRef& x, int k, FftAttr attr);

double autocorrelation(const SeriesRef& x, int lag);

/// OLS fit of x_t = c0 + sum_i c_i x_{t-i}; returns c_k (k = 0 is the intercept).
double ar_coefficient(const SeriesRef& x, int k = 1, int order = 2);

struct BasicStats {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  double variance = 0.0;
  double abs_energy = 0.0;
  double mean_abs_change = 0.0;
};
BasicStats basic_stats(const SeriesRef& x);

struct RollingStats {
  double moving_average_last = kMissing;
  double sliding_std_max = kMissing;
};
RollingStats rolling_stats(const SeriesRef& x, int w = 3);

/// Per-bin (mean signal, mean increment) after quantile-binning the pairs
/// (x_i, x_{i+1} - x_i) into at most r bins; empty bins are dropped.
struct DriftBins {
  Eigen::VectorXd signal;
  Eigen::VectorXd increment;
};
DriftBins drift_bins(const SeriesRef& x, int r);

/// Coefficients of the fitted drift polynomial in ascending powers
/// (entry k multiplies v^k). All entries missing when the fit is impossible.
Eigen::VectorXd friedrich_coefficients(const SeriesRef& x, int m = 3, int r = 30);

/// Largest real root of the fitted drift polynomial.
double max_langevin_fixed_point(const SeriesRef& x, int m = 3, int r = 30);

}  // namespace features

enum class FeatureFn {
  mean,
  standard_deviation,
  minimum,
  maximum,
  median,
  variance,
  abs_energy,
  mean_abs_change,
  moving_average_last,
  sliding_std_max,
  sum_values,
  mean_n_absolute_max,
  c3,
  binned_entropy,
  index_mass_quantile,
  number_cwt_peaks,
  fft_coefficient,
  autocorrelation,
  ar_coefficient,
  friedrich_coefficients,
  max_langevin_fixed_point,
};

/// One named feature: function, parameters and input series. The canonical
/// name round-trips through parse().
struct FeatureSpec {
  FeatureFn fn = FeatureFn::sum_values;
  int a = 0;      // lag / n / max_bins / max_width / coeff / w / k / m
  int b = 0;      // order / r / m (friedrich)
  int c = 0;      // r (friedrich)
  double q = 0.0;  // index_mass_quantile
  features::FftAttr attr = features::FftAttr::real;
  bool iat = false;  // evaluate on inter-arrival times instead of lengths

  std::string name() const;
  static FeatureSpec parse(std::string_view name);

  /// Raw value, possibly features::kMissing.
  double evaluate(const SeriesRef& series) const;

  bool operator==(const FeatureSpec&) const = default;
};

std::vector<FeatureSpec> default_catalog();
std::vector<std::string> spec_names(const std::vector<FeatureSpec>& specs);

/// Packet lengths and inter-arrival times of a window.
Series length_series(const Window& w);
Series iat_series(const Window& w);

struct FeatureVector {
  std::string window_id;
  Eigen::VectorXd values;  // ordered like the spec list, all finite
};

FeatureVector extract(const Window& window, const std::vector<FeatureSpec>& specs);

}  // namespace cryptocatch

#endif  // CRYPTOCATCH_FEATURES_HPP
