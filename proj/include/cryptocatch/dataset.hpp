#ifndef CRYPTOCATCH_DATASET_HPP
#define CRYPTOCATCH_DATASET_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cryptocatch/features.hpp"
#include "cryptocatch/flow.hpp"

namespace cryptocatch {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Rows are windows, columns are named features.
struct FeatureMatrix {
  std::vector<std::string> ids;
  std::vector<std::optional<Label>> labels;
  std::vector<std::string> names;
  Matrix values;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  bool has_labels() const;

  /// Column subset in the given order; throws on unknown names.
  FeatureMatrix select_columns(const std::vector<std::string>& keep) const;
  FeatureMatrix select_rows(const std::vector<Eigen::Index>& rows) const;
  std::optional<Eigen::Index> column_index(const std::string& name) const;
};

FeatureMatrix build_matrix(const std::vector<Window>& windows,
                           const std::vector<FeatureSpec>& specs);

/// CSV: `window_id[,label],<feature names...>`.
void write_matrix_csv(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_matrix_csv(std::istream& in);

/// Binary targets (mining = 1) from labels; throws if any label is missing.
std::vector<int> binary_targets(const FeatureMatrix& m);
/// Coin-class targets 0..6 from labels; throws on benign or missing labels.
std::vector<int> coin_targets(const FeatureMatrix& m);

}  // namespace cryptocatch

#endif  // CRYPTOCATCH_DATASET_HPP
