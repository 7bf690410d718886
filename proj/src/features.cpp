#include "cryptocatch/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace cryptocatch {
namespace features {

namespace {

double population_variance(const SeriesRef& x) {
  const double mu = x.mean();
  return (x.array() - mu).square().mean();
}

// Linear-interpolated quantile of sorted values (numpy's default).
double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted.front();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Interior maximum by a margin; symmetric rows tie exactly in theory and
// summation order must not decide them.
bool strict_local_max(const Eigen::MatrixXd& cwt, Eigen::Index row, Eigen::Index i) {
  const auto n = cwt.cols();
  if (i <= 0 || i + 1 >= n) return false;
  const double eps = 1e-9 * cwt.row(row).cwiseAbs().maxCoeff();
  return cwt(row, i) > cwt(row, i - 1) + eps && cwt(row, i) > cwt(row, i + 1) + eps;
}

// Least-squares solve with a rank check; empty vector when rank-deficient.
std::optional<Eigen::VectorXd> rank_checked_lstsq(const Eigen::MatrixXd& design,
                                                  const Eigen::VectorXd& rhs) {
  if (design.rows() < design.cols()) return std::nullopt;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) return std::nullopt;
  return Eigen::VectorXd(qr.solve(rhs));
}

}  // namespace

double sum_values(const SeriesRef& x) { return x.sum(); }

double mean_n_absolute_max(const SeriesRef& x, int n) {
  if (x.size() == 0 || n < 1) return kMissing;
  std::vector<double> a(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) a[i] = std::abs(x[i]);
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(n), a.size());
  std::partial_sort(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(take), a.end(),
                    std::greater<>{});
  double s = 0.0;
  for (std::size_t i = 0; i < take; ++i) s += a[i];
  return s / static_cast<double>(take);
}

double c3(const SeriesRef& x, int lag) {
  const auto n = x.size();
  if (lag < 1 || n <= 2 * lag) return kMissing;
  const auto m = n - 2 * lag;
  return (x.segment(2 * lag, m).array() * x.segment(lag, m).array() * x.head(m).array()).sum() /
         static_cast<double>(m);
}

double binned_entropy(const SeriesRef& x, int max_bins) {
  const auto n = x.size();
  if (n == 0 || max_bins < 1) return kMissing;
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  std::vector<int> counts(static_cast<std::size_t>(max_bins), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int bin = 0;
    if (hi > lo) {
      bin = static_cast<int>(std::floor((x[i] - lo) / (hi - lo) * max_bins));
      bin = std::clamp(bin, 0, max_bins - 1);
    }
    ++counts[static_cast<std::size_t>(bin)];
  }
  double h = 0.0;
  for (int c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h;
}

double index_mass_quantile(const SeriesRef& x, double q) {
  const auto n = x.size();
  if (n == 0 || !(q > 0.0 && q < 1.0)) return kMissing;
  const double total = x.cwiseAbs().sum();
  if (total <= 0.0) return kMissing;
  double cum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cum += std::abs(x[i]);
    if (cum >= q * total) return static_cast<double>(i + 1) / static_cast<double>(n);
  }
  return 1.0;
}

Eigen::MatrixXd ricker_cwt(const SeriesRef& x, int max_width) {
  const auto n = x.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(max_width, n);
  for (int width = 1; width <= max_width; ++width) {
    // Odd length, centred on a sample, five widths each side.
    const auto shift = std::min<Eigen::Index>(5 * width, n - 1);
    const auto len = 2 * shift + 1;
    const double a = width;
    const double amp = 2.0 / (std::sqrt(3.0 * a) * std::pow(std::numbers::pi, 0.25));
    Eigen::VectorXd kernel(len);
    for (Eigen::Index j = 0; j < len; ++j) {
      const double t2 = static_cast<double>((j - shift) * (j - shift)) / (a * a);
      kernel[j] = amp * (1.0 - t2) * std::exp(-t2 / 2.0);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < len; ++j) {
        const auto src = i + shift - j;
        if (src >= 0 && src < n) acc += kernel[j] * x[src];
      }
      out(width - 1, i) = acc;
    }
  }
  return out;
}

double number_cwt_peaks(const SeriesRef& x, int max_width) {
  const auto n = x.size();
  if (n < 3 || max_width < 1) return kMissing;
  const Eigen::MatrixXd cwt = ricker_cwt(x, max_width);
  const int needed = (max_width + 3) / 4;

  std::vector<double> mags(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) mags[i] = std::abs(cwt(0, i));
  std::sort(mags.begin(), mags.end());
  const double floor = sorted_quantile(mags, 0.1);

  int peaks = 0;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    if (!strict_local_max(cwt, 0, i) || !(cwt(0, i) > floor)) continue;
    int run = 1;
    auto pos = i;
    for (int w = 1; w < max_width && run < needed; ++w) {
      Eigen::Index best = -1;
      for (auto j = pos - 1; j <= pos + 1; ++j) {
        if (j < 0 || j >= n || !strict_local_max(cwt, w, j)) continue;
        if (best < 0 || cwt(w, j) > cwt(w, best)) best = j;
      }
      if (best < 0) break;
      pos = best;
      ++run;
    }
    if (run >= needed) ++peaks;
  }
  return peaks;
}

std::string_view to_string(FftAttr a) {
  switch (a) {
    case FftAttr::real: return "real";
    case FftAttr::imag: return "imag";
    case FftAttr::abs: return "abs";
    case FftAttr::angle: return "angle";
  }
  return "real";
}

std::optional<FftAttr> parse_fft_attr(std::string_view s) {
  for (auto a : {FftAttr::real, FftAttr::imag, FftAttr::abs, FftAttr::angle})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

double fft_coefficient(const SeriesRef& x, int k, FftAttr attr) {
  const auto n = x.size();
  if (n == 0 || k < 0 || k > n / 2) return kMissing;
  std::complex<double> acc{0.0, 0.0};
  for (Eigen::Index t = 0; t < n; ++t) {
    const double phase = -2.0 * std::numbers::pi * k * static_cast<double>(t) / n;
    acc += x[t] * std::polar(1.0, phase);
  }
  switch (attr) {
    case FftAttr::real: return acc.real();
    case FftAttr::imag: return acc.imag();
    case FftAttr::abs: return std::abs(acc);
    case FftAttr::angle: {
      const double deg = std::atan2(acc.imag(), acc.real()) * 180.0 / std::numbers::pi;
      return deg <= -180.0 ? 180.0 : deg;
    }
  }
  return kMissing;
}

double autocorrelation(const SeriesRef& x, int lag) {
  const auto n = x.size();
  if (lag < 0 || lag >= n) return kMissing;
  if (lag == 0) return 1.0;
  const double var = population_variance(x);
  if (!(var > 0.0)) return kMissing;
  const double mu = x.mean();
  const auto m = n - lag;
  const double s =
      ((x.head(m).array() - mu) * (x.segment(lag, m).array() - mu)).sum();
  return s / (static_cast<double>(m) * var);
}

double ar_coefficient(const SeriesRef& x, int k, int order) {
  const auto n = x.size();
  if (order < 1 || k < 0 || k > order || n < order + 2) return kMissing;
  const auto rows = n - order;
  Eigen::MatrixXd design(rows, order + 1);
  Eigen::VectorXd target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto t = r + order;
    design(r, 0) = 1.0;
    for (int i = 1; i <= order; ++i) design(r, i) = x[t - i];
    target[r] = x[t];
  }
  auto coef = rank_checked_lstsq(design, target);
  return coef ? (*coef)[k] : kMissing;
}

BasicStats basic_stats(const SeriesRef& x) {
  BasicStats s;
  const auto n = x.size();
  if (n == 0) {
    const double nan = kMissing;
    return {nan, nan, nan, nan, nan, nan, nan, nan};
  }
  s.mean = x.mean();
  s.variance = population_variance(x);
  s.std = std::sqrt(s.variance);
  s.min = x.minCoeff();
  s.max = x.maxCoeff();
  std::vector<double> sorted(x.data(), x.data() + n);
  std::sort(sorted.begin(), sorted.end());
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.abs_energy = x.squaredNorm();
  s.mean_abs_change =
      n < 2 ? kMissing : (x.tail(n - 1) - x.head(n - 1)).cwiseAbs().mean();
  return s;
}

RollingStats rolling_stats(const SeriesRef& x, int w) {
  RollingStats s;
  const auto n = x.size();
  if (w < 1 || n < w) return s;
  s.moving_average_last = x.tail(w).mean();
  double best = 0.0;
  for (Eigen::Index i = 0; i + w <= n; ++i) best = std::max(best, std::sqrt(population_variance(x.segment(i, w))));
  s.sliding_std_max = best;
  return s;
}

DriftBins drift_bins(const SeriesRef& x, int r) {
  const auto n = x.size();
  if (n < 2 || r < 1) return {};
  const auto pairs = n - 1;
  std::vector<double> sorted(x.data(), x.data() + pairs);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(r) + 1);
  for (int k = 0; k <= r; ++k) {
    const double e = sorted_quantile(sorted, static_cast<double>(k) / r);
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  const auto bins = std::max<std::size_t>(1, edges.size() - 1);
  std::vector<double> sum_sig(bins, 0.0), sum_inc(bins, 0.0);
  std::vector<int> count(bins, 0);
  for (Eigen::Index i = 0; i < pairs; ++i) {
    // First bin is closed on the left; the rest are (e_k, e_{k+1}].
    std::size_t b = 0;
    if (edges.size() > 1) {
      auto it = std::lower_bound(edges.begin() + 1, edges.end(), x[i]);
      b = std::min<std::size_t>(static_cast<std::size_t>(it - edges.begin()) - 1, bins - 1);
    }
    sum_sig[b] += x[i];
    sum_inc[b] += x[i + 1] - x[i];
    ++count[b];
  }
  DriftBins out;
  const auto populated = std::count_if(count.begin(), count.end(), [](int c) { return c > 0; });
  out.signal.resize(populated);
  out.increment.resize(populated);
  Eigen::Index j = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    out.signal[j] = sum_sig[b] / count[b];
    out.increment[j] = sum_inc[b] / count[b];
    ++j;
  }
  return out;
}

Eigen::VectorXd friedrich_coefficients(const SeriesRef& x, int m, int r) {
  Eigen::VectorXd missing = Eigen::VectorXd::Constant(std::max(m, 0) + 1, kMissing);
  if (m < 0 || x.size() < 3) return missing;
  const DriftBins bins = drift_bins(x, r);
  if (bins.signal.size() < m + 1) return missing;
  Eigen::MatrixXd vander(bins.signal.size(), m + 1);
  for (Eigen::Index i = 0; i < bins.signal.size(); ++i) {
    double p = 1.0;
    for (int k = 0; k <= m; ++k, p *= bins.signal[i]) vander(i, k) = p;
  }
  auto coef = rank_checked_lstsq(vander, bins.increment);
  return coef ? *coef : missing;
}

double max_langevin_fixed_point(const SeriesRef& x, int m, int r) {
  const Eigen::VectorXd c = friedrich_coefficients(x, m, r);
  if (is_missing(c[0])) return kMissing;

  // Drop vanishing leading terms so the companion matrix stays finite.
  const double scale = c.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return kMissing;
  Eigen::Index deg = c.size() - 1;
  while (deg > 0 && std::abs(c[deg]) <= 1e-9 * scale) --deg;
  if (deg == 0) return kMissing;

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  for (Eigen::Index i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < deg; ++i) companion(i, deg - 1) = -c[i] / c[deg];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) return kMissing;

  auto h = [&](double v) {
    double acc = 0.0;
    for (Eigen::Index k = deg; k >= 0; --k) acc = acc * v + c[k];
    return acc;
  };
  auto dh = [&](double v) {
    double acc = 0.0;
    for (Eigen::Index k = deg; k >= 1; --k) acc = acc * v + static_cast<double>(k) * c[k];
    return acc;
  };

  std::optional<double> best;
  for (const auto& z : solver.eigenvalues()) {
    if (std::abs(z.imag()) > 1e-7 * std::max(1.0, std::abs(z.real()))) continue;
    double v = z.real();
    for (int it = 0; it < 8; ++it) {
      const double d = dh(v);
      if (d == 0.0) break;
      const double step = h(v) / d;
      v -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(v))) break;
    }
    if (!std::isfinite(v)) continue;
    if (!best || v > *best) best = v;
  }
  return best ? *best : kMissing;
}

}  // namespace features

// ---------------------------------------------------------------------------
// Catalog

namespace {

struct FnInfo {
  FeatureFn fn;
  std::string_view name;
  std::string_view param_a;  // empty when unused
  std::string_view param_b;
};

// Parameter order in canonical names follows this table.
constexpr FnInfo kFnTable[] = {
    {FeatureFn::mean, "mean", "", ""},
    {FeatureFn::standard_deviation, "standard_deviation", "", ""},
    {FeatureFn::minimum, "minimum", "", ""},
    {FeatureFn::maximum, "maximum", "", ""},
    {FeatureFn::median, "median", "", ""},
    {FeatureFn::variance, "variance", "", ""},
    {FeatureFn::abs_energy, "abs_energy", "", ""},
    {FeatureFn::mean_abs_change, "mean_abs_change", "", ""},
    {FeatureFn::moving_average_last, "moving_average_last", "w", ""},
    {FeatureFn::sliding_std_max, "sliding_std_max", "w", ""},
    {FeatureFn::sum_values, "sum_values", "", ""},
    {FeatureFn::mean_n_absolute_max, "mean_n_absolute_max", "n", ""},
    {FeatureFn::c3, "c3", "lag", ""},
    {FeatureFn::binned_entropy, "binned_entropy", "max_bins", ""},
    {FeatureFn::index_mass_quantile, "index_mass_quantile", "", ""},
    {FeatureFn::number_cwt_peaks, "number_cwt_peaks", "max_width", ""},
    {FeatureFn::fft_coefficient, "fft_coefficient", "coeff", ""},
    {FeatureFn::autocorrelation, "autocorrelation", "lag", ""},
    {FeatureFn::ar_coefficient, "ar_coefficient", "coeff", "order"},
    {FeatureFn::friedrich_coefficients, "friedrich_coefficients", "coeff", "m"},
    {FeatureFn::max_langevin_fixed_point, "max_langevin_fixed_point", "m", "r"},
};

const FnInfo& info(FeatureFn fn) {
  for (const auto& i : kFnTable)
    if (i.fn == fn) return i;
  throw std::logic_error("unknown feature function");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
T parse_value(std::string_view s, std::string_view name) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("bad parameter value in feature name: " + std::string(name));
  return v;
}

}  // namespace

std::string FeatureSpec::name() const {
  const auto& fi = info(fn);
  std::string out(fi.name);
  auto add = [&out](std::string_view key, const std::string& value) {
    out += "__";
    out += key;
    out += '_';
    out += value;
  };
  switch (fn) {
    case FeatureFn::index_mass_quantile: add("q", format_double(q)); break;
    case FeatureFn::fft_coefficient:
      add("attr", std::string(features::to_string(attr)));
      add("coeff", std::to_string(a));
      break;
    case FeatureFn::friedrich_coefficients:
      add("coeff", std::to_string(a));
      add("m", std::to_string(b));
      add("r", std::to_string(c));
      break;
    default:
      if (!fi.param_a.empty()) add(fi.param_a, std::to_string(a));
      if (!fi.param_b.empty()) add(fi.param_b, std::to_string(b));
  }
  if (iat) out += "__iat";
  return out;
}

FeatureSpec FeatureSpec::parse(std::string_view name) {
  std::vector<std::string_view> parts;
  for (std::size_t start = 0;;) {
    auto pos = name.find("__", start);
    parts.push_back(name.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 2;
  }
  FeatureSpec s;
  if (parts.size() > 1 && parts.back() == "iat") {
    s.iat = true;
    parts.pop_back();
  }
  const FnInfo* fi = nullptr;
  for (const auto& i : kFnTable)
    if (i.name == parts[0]) fi = &i;
  if (!fi) throw std::invalid_argument("unknown feature: " + std::string(name));
  s.fn = fi->fn;

  auto param = [&](std::string_view key) -> std::optional<std::string_view> {
    for (std::size_t i = 1; i < parts.size(); ++i) {
      auto p = parts[i];
      if (p.size() > key.size() && p.substr(0, key.size()) == key && p[key.size()] == '_')
        return p.substr(key.size() + 1);
    }
    return std::nullopt;
  };
  auto require = [&](std::string_view key) {
    auto v = param(key);
    if (!v) throw std::invalid_argument("missing parameter '" + std::string(key) + "' in " +
                                        std::string(name));
    return *v;
  };

  std::size_t expected_params = 0;
  switch (s.fn) {
    case FeatureFn::index_mass_quantile:
      s.q = parse_value<double>(require("q"), name);
      expected_params = 1;
      break;
    case FeatureFn::fft_coefficient: {
      auto attr = features::parse_fft_attr(require("attr"));
      if (!attr) throw std::invalid_argument("bad fft attr in " + std::string(name));
      s.attr = *attr;
      s.a = parse_value<int>(require("coeff"), name);
      expected_params = 2;
      break;
    }
    case FeatureFn::friedrich_coefficients:
      s.a = parse_value<int>(require("coeff"), name);
      s.b = parse_value<int>(require("m"), name);
      s.c = parse_value<int>(require("r"), name);
      expected_params = 3;
      break;
    default:
      if (!fi->param_a.empty()) {
        s.a = parse_value<int>(require(fi->param_a), name);
        ++expected_params;
      }
      if (!fi->param_b.empty()) {
        s.b = parse_value<int>(require(fi->param_b), name);
        ++expected_params;
      }
  }
  if (parts.size() - 1 != expected_params)
    throw std::invalid_argument("unexpected parameters in feature name: " + std::string(name));
  return s;
}

double FeatureSpec::evaluate(const SeriesRef& x) const {
  using namespace features;
  switch (fn) {
    case FeatureFn::mean: return x.size() ? basic_stats(x).mean : kMissing;
    case FeatureFn::standard_deviation: return x.size() ? basic_stats(x).std : kMissing;
    case FeatureFn::minimum: return x.size() ? x.minCoeff() : kMissing;
    case FeatureFn::maximum: return x.size() ? x.maxCoeff() : kMissing;
    case FeatureFn::median: return basic_stats(x).median;
    case FeatureFn::variance: return basic_stats(x).variance;
    case FeatureFn::abs_energy: return x.squaredNorm();
    case FeatureFn::mean_abs_change: return basic_stats(x).mean_abs_change;
    case FeatureFn::moving_average_last: return rolling_stats(x, a).moving_average_last;
    case FeatureFn::sliding_std_max: return rolling_stats(x, a).sliding_std_max;
    case FeatureFn::sum_values: return sum_values(x);
    case FeatureFn::mean_n_absolute_max: return mean_n_absolute_max(x, a);
    case FeatureFn::c3: return features::c3(x, a);
    case FeatureFn::binned_entropy: return binned_entropy(x, a);
    case FeatureFn::index_mass_quantile: return index_mass_quantile(x, q);
    case FeatureFn::number_cwt_peaks: return number_cwt_peaks(x, a);
    case FeatureFn::fft_coefficient: return fft_coefficient(x, a, attr);
    case FeatureFn::autocorrelation: return autocorrelation(x, a);
    case FeatureFn::ar_coefficient: return ar_coefficient(x, a, b);
    case FeatureFn::friedrich_coefficients: {
      if (a < 0 || a > b) return kMissing;
      return friedrich_coefficients(x, b, c)[a];
    }
    case FeatureFn::max_langevin_fixed_point: return max_langevin_fixed_point(x, a, b);
  }
  return kMissing;
}

std::vector<FeatureSpec> default_catalog() {
  using features::FftAttr;
  std::vector<FeatureSpec> base;
  auto plain = [&base](FeatureFn fn, int a = 0, int b = 0) {
    FeatureSpec s;
    s.fn = fn;
    s.a = a;
    s.b = b;
    base.push_back(s);
  };
  for (auto fn : {FeatureFn::mean, FeatureFn::standard_deviation, FeatureFn::minimum,
                  FeatureFn::maximum, FeatureFn::median, FeatureFn::variance,
                  FeatureFn::abs_energy, FeatureFn::mean_abs_change})
    plain(fn);
  plain(FeatureFn::moving_average_last, 3);
  plain(FeatureFn::sliding_std_max, 3);
  plain(FeatureFn::sum_values);
  plain(FeatureFn::mean_n_absolute_max, 7);
  for (int lag : {1, 2, 3}) plain(FeatureFn::c3, lag);
  plain(FeatureFn::binned_entropy, 10);
  for (double q : {0.1, 0.5, 0.9}) {
    FeatureSpec s;
    s.fn = FeatureFn::index_mass_quantile;
    s.q = q;
    base.push_back(s);
  }
  plain(FeatureFn::number_cwt_peaks, 5);
  for (int k = 0; k <= 4; ++k)
    for (auto attr : {FftAttr::real, FftAttr::imag, FftAttr::abs, FftAttr::angle}) {
      FeatureSpec s;
      s.fn = FeatureFn::fft_coefficient;
      s.a = k;
      s.attr = attr;
      base.push_back(s);
    }
  for (int lag : {1, 2, 3}) plain(FeatureFn::autocorrelation, lag);
  for (int k : {0, 1, 2}) plain(FeatureFn::ar_coefficient, k, 2);
  for (int k = 0; k <= 3; ++k) {
    plain(FeatureFn::friedrich_coefficients, k, 3);
    base.back().c = 30;
  }
  plain(FeatureFn::max_langevin_fixed_point, 3, 30);

  std::vector<FeatureSpec> out = base;
  for (auto s : base) {
    s.iat = true;
    out.push_back(s);
  }
  return out;
}

std::vector<std::string> spec_names(const std::vector<FeatureSpec>& specs) {
  std::vector<std::string> names;
  names.reserve(specs.size());
  for (const auto& s : specs) names.push_back(s.name());
  return names;
}

Series length_series(const Window& w) {
  Series x(static_cast<Eigen::Index>(w.packets.size()));
  for (std::size_t i = 0; i < w.packets.size(); ++i) x[static_cast<Eigen::Index>(i)] = w.packets[i].len;
  return x;
}

Series iat_series(const Window& w) {
  const auto n = w.packets.size();
  Series x(static_cast<Eigen::Index>(n > 0 ? n - 1 : 0));
  for (std::size_t i = 1; i < n; ++i)
    x[static_cast<Eigen::Index>(i - 1)] = w.packets[i].ts - w.packets[i - 1].ts;
  return x;
}

FeatureVector extract(const Window& window, const std::vector<FeatureSpec>& specs) {
  if (specs.empty()) throw std::invalid_argument("empty feature spec list");
  const Series lens = length_series(window);
  const Series iats = iat_series(window);
  FeatureVector fv;
  fv.window_id = window.id();
  fv.values.resize(static_cast<Eigen::Index>(specs.size()));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const double v = specs[i].evaluate(specs[i].iat ? iats : lens);
    fv.values[static_cast<Eigen::Index>(i)] = std::isfinite(v) ? v : 0.0;
  }
  return fv;
}

}  // namespace cryptocatch
