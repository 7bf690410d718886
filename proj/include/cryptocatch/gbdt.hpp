#ifndef CRYPTOCATCH_GBDT_HPP
#define CRYPTOCATCH_GBDT_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cryptocatch/dataset.hpp"
#include "cryptocatch/select.hpp"

namespace cryptocatch {

struct Hyperparams {
  double gamma = 0.0;             // minimum split gain
  int max_depth = 6;
  double subsample = 1.0;
  double colsample_bytree = 1.0;
  double min_child_weight = 1.0;  // minimum hessian sum per child
  double learning_rate = 0.3;
  int num_rounds = 50;
  double lambda = 1.0;            // leaf L2
  std::uint64_t seed = 0;
  int early_stopping_rounds = 0;  // 0 disables; needs a validation set

  /// Averaged Bayesian-optimisation optimum reported for the detector.
  static Hyperparams detector_defaults();

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep the defaults of `base`.
  static Hyperparams from_json(const nlohmann::json& j);
  static Hyperparams from_json(const nlohmann::json& j, const Hyperparams& base);
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;   // rows with x <= threshold
  int right = -1;
  double value = 0.0;  // leaf weight, already scaled by the learning rate
  double gain = 0.0;   // split gain (internal nodes)

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  template <typename Row>
  double predict(const Row& row) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = row[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }
  int depth() const;
  int leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

enum class Task { binary, multiclass };
std::string_view to_string(Task t);
std::optional<Task> parse_task(std::string_view s);

class BoostedEnsemble {
 public:
  Task task = Task::binary;
  int num_class = 2;
  double base_score = 0.0;
  std::vector<std::string> feature_names;
  Hyperparams hp;
  std::vector<DecisionTree> trees;    // round-major; one (binary) or num_class per round
  std::vector<double> training_loss;  // after each round

  int trees_per_round() const { return task == Task::binary ? 1 : num_class; }
  std::size_t rounds() const { return trees.size() / static_cast<std::size_t>(trees_per_round()); }

  /// Summed leaf values (plus base), one entry per output.
  Eigen::VectorXd raw_scores(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  /// Binary: P(mining) in a 1-vector. Multiclass: softmax over classes.
  Eigen::VectorXd predict_proba_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  /// Columns are matched by name; throws if a model feature is absent.
  Eigen::MatrixXd predict_proba(const FeatureMatrix& m) const;
  /// Rows already in model feature order.
  Eigen::MatrixXd predict_proba(const Matrix& x) const;
  /// Positive-class score per row (binary models only).
  Eigen::VectorXd predict_score(const FeatureMatrix& m) const;

  /// Total split gain per feature normalised to sum 1; descending.
  ImportanceRanking feature_importance() const;

  nlohmann::json to_json() const;
  static BoostedEnsemble from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static BoostedEnsemble load(const std::string& path);
};

/// Grows one regression tree on (gradient, hessian) pairs by exact greedy
/// split search. `rows` and `cols` restrict the sample and feature sets.
DecisionTree grow_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                       std::span<const Eigen::Index> rows, std::span<const Eigen::Index> cols,
                       const Hyperparams& hp);

struct ValidationSet {
  const Matrix* x = nullptr;
  const std::vector<int>* labels = nullptr;
};

/// Labels: 0/1 for binary, 0..num_class-1 for multiclass.
BoostedEnsemble train(const Matrix& x, const std::vector<int>& labels,
                      const std::vector<std::string>& feature_names, const Hyperparams& hp,
                      Task task, int num_class = 2, const ValidationSet& valid = ValidationSet{});
BoostedEnsemble train(const FeatureMatrix& m, const std::vector<int>& labels,
                      const Hyperparams& hp, Task task, int num_class = 2);

/// Mean logistic (binary) or softmax cross-entropy (multiclass) loss.
double ensemble_loss(const BoostedEnsemble& model, const Matrix& x, const std::vector<int>& labels);

struct FoldMetrics {
  // binary
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  // multiclass
  double accuracy = 0.0;
  double mlogloss = 0.0;
};

struct CrossValidation {
  std::vector<int> fold_of;  // per row
  std::vector<FoldMetrics> folds;
  FoldMetrics mean;
};

/// Seeded stratified k-fold. Binary metrics use a 0.5 threshold.
std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, std::uint64_t seed);
CrossValidation cross_validate(const Matrix& x, const std::vector<int>& labels,
                               const std::vector<std::string>& feature_names,
                               const Hyperparams& hp, Task task, int num_class = 2,
                               int folds = 5, std::uint64_t seed = 0);

}  // namespace cryptocatch

#endif  // CRYPTOCATCH_GBDT_HPP
