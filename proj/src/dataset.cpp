#include "cryptocatch/dataset.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace cryptocatch {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    auto field = line.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(std::move(field));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

void write_double(std::ostream& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

}  // namespace

bool FeatureMatrix::has_labels() const {
  if (labels.empty()) return false;
  for (const auto& l : labels)
    if (!l) return false;
  return true;
}

std::optional<Eigen::Index> FeatureMatrix::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Eigen::Index>(i);
  return std::nullopt;
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::string>& keep) const {
  FeatureMatrix out;
  out.ids = ids;
  out.labels = labels;
  out.names = keep;
  out.values.resize(rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    auto idx = column_index(keep[j]);
    if (!idx) throw std::invalid_argument("feature not in matrix: " + keep[j]);
    out.values.col(static_cast<Eigen::Index>(j)) = values.col(*idx);
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<Eigen::Index>& rows_) const {
  FeatureMatrix out;
  out.names = names;
  out.values.resize(static_cast<Eigen::Index>(rows_.size()), cols());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto r = rows_[i];
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(r);
    if (!ids.empty()) out.ids.push_back(ids[static_cast<std::size_t>(r)]);
    if (!labels.empty()) out.labels.push_back(labels[static_cast<std::size_t>(r)]);
  }
  return out;
}

FeatureMatrix build_matrix(const std::vector<Window>& windows,
                           const std::vector<FeatureSpec>& specs) {
  FeatureMatrix m;
  m.names = spec_names(specs);
  m.values.resize(static_cast<Eigen::Index>(windows.size()),
                  static_cast<Eigen::Index>(specs.size()));
  m.ids.reserve(windows.size());
  m.labels.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    auto fv = extract(windows[i], specs);
    m.values.row(static_cast<Eigen::Index>(i)) = fv.values.transpose();
    m.ids.push_back(std::move(fv.window_id));
    m.labels.push_back(windows[i].label);
  }
  return m;
}

void write_matrix_csv(std::ostream& out, const FeatureMatrix& m) {
  bool any_label = false;
  for (const auto& l : m.labels) any_label = any_label || l.has_value();
  out << "window_id";
  if (any_label) out << ",label";
  for (const auto& n : m.names) out << ',' << n;
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << m.ids[static_cast<std::size_t>(r)];
    if (any_label) {
      out << ',';
      if (const auto& l = m.labels[static_cast<std::size_t>(r)]) out << to_string(*l);
    }
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << ',';
      write_double(out, m.values(r, c));
    }
    out << '\n';
  }
}

FeatureMatrix read_matrix_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty feature matrix");
  auto header = split_csv(line);
  if (header.empty() || header[0] != "window_id")
    throw std::runtime_error("feature matrix must start with a window_id column");
  const bool labelled = header.size() > 1 && header[1] == "label";
  const std::size_t first = labelled ? 2 : 1;

  FeatureMatrix m;
  m.names.assign(header.begin() + static_cast<std::ptrdiff_t>(first), header.end());
  std::vector<double> flat;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv(line);
    if (f.size() != header.size())
      throw std::runtime_error("feature matrix line " + std::to_string(lineno) +
                               ": expected " + std::to_string(header.size()) + " fields");
    m.ids.push_back(f[0]);
    if (labelled && !f[1].empty()) {
      auto l = parse_label(f[1]);
      if (!l) throw std::runtime_error("unknown label '" + f[1] + "'");
      m.labels.push_back(*l);
    } else {
      m.labels.push_back(std::nullopt);
    }
    for (std::size_t c = first; c < f.size(); ++c) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f[c].data(), f[c].data() + f[c].size(), v);
      if (ec != std::errc{} || ptr != f[c].data() + f[c].size())
        throw std::runtime_error("feature matrix line " + std::to_string(lineno) +
                                 ": bad number '" + f[c] + "'");
      flat.push_back(v);
    }
  }
  const auto rows = static_cast<Eigen::Index>(m.ids.size());
  const auto cols = static_cast<Eigen::Index>(m.names.size());
  m.values = Eigen::Map<Matrix>(flat.data(), rows, cols);
  return m;
}

std::vector<int> binary_targets(const FeatureMatrix& m) {
  std::vector<int> y;
  y.reserve(m.labels.size());
  for (const auto& l : m.labels) {
    if (!l) throw std::invalid_argument("unlabelled row in training matrix");
    y.push_back(is_mining(*l) ? 1 : 0);
  }
  return y;
}

std::vector<int> coin_targets(const FeatureMatrix& m) {
  std::vector<int> y;
  y.reserve(m.labels.size());
  for (const auto& l : m.labels) {
    if (!l) throw std::invalid_argument("unlabelled row in training matrix");
    y.push_back(coin_index(*l));
  }
  return y;
}

}  // namespace cryptocatch
