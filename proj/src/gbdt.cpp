#include "cryptocatch/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "cryptocatch/metrics.hpp"

namespace cryptocatch {

using nlohmann::json;

namespace {

constexpr int kModelVersion = 1;
constexpr std::string_view kModelFormat = "cryptocatch-gbdt";
constexpr double kMinHessian = 1e-16;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void softmax_inplace(Eigen::Ref<Eigen::VectorXd> z) {
  const double mx = z.maxCoeff();
  z = (z.array() - mx).exp();
  z /= z.sum();
}

// Row indices of every column sorted by value; built once per training run.
using SortedColumns = std::vector<std::vector<Eigen::Index>>;

SortedColumns sort_columns(const Matrix& x) {
  SortedColumns sorted(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    auto& idx = sorted[static_cast<std::size_t>(c)];
    idx.resize(static_cast<std::size_t>(x.rows()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return x(a, c) < x(b, c); });
  }
  return sorted;
}

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  double grad_left = 0.0;
  double hess_left = 0.0;
};

double leaf_score(double g, double h, double lambda) {
  const double den = h + lambda;
  return den > 0.0 ? g * g / den : 0.0;
}

DecisionTree grow_presorted(const Matrix& x, const SortedColumns& sorted,
                            std::span<const double> grad, std::span<const double> hess,
                            std::span<const Eigen::Index> rows, std::span<const Eigen::Index> cols,
                            const Hyperparams& hp) {
  const auto n = x.rows();
  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  DecisionTree tree;
  tree.nodes.emplace_back();
  std::vector<double> node_g{0.0}, node_h{0.0};
  for (auto r : rows) {
    pos[static_cast<std::size_t>(r)] = 0;
    node_g[0] += grad[static_cast<std::size_t>(r)];
    node_h[0] += hess[static_cast<std::size_t>(r)];
  }

  std::vector<int> frontier{0};
  for (int depth = 0; depth < hp.max_depth && !frontier.empty(); ++depth) {
    const std::size_t nodes_now = tree.nodes.size();
    std::vector<char> active(nodes_now, 0);
    for (int id : frontier) active[static_cast<std::size_t>(id)] = 1;

    std::vector<SplitCandidate> best(nodes_now);
    std::vector<double> gl(nodes_now), hl(nodes_now), last(nodes_now);
    std::vector<char> seen(nodes_now);

    for (auto f : cols) {
      std::fill(gl.begin(), gl.end(), 0.0);
      std::fill(hl.begin(), hl.end(), 0.0);
      std::fill(seen.begin(), seen.end(), 0);
      for (auto r : sorted[static_cast<std::size_t>(f)]) {
        const int id = pos[static_cast<std::size_t>(r)];
        if (id < 0 || !active[static_cast<std::size_t>(id)]) continue;
        const auto sid = static_cast<std::size_t>(id);
        const double v = x(r, f);
        if (seen[sid] && v != last[sid]) {
          const double g_left = gl[sid], h_left = hl[sid];
          const double g_right = node_g[sid] - g_left, h_right = node_h[sid] - h_left;
          if (h_left >= hp.min_child_weight && h_right >= hp.min_child_weight) {
            const double gain = 0.5 * (leaf_score(g_left, h_left, hp.lambda) +
                                       leaf_score(g_right, h_right, hp.lambda) -
                                       leaf_score(node_g[sid], node_h[sid], hp.lambda)) -
                                hp.gamma;
            if (gain > best[sid].gain) {
              double thr = last[sid] + (v - last[sid]) / 2.0;
              if (!(thr < v)) thr = last[sid];
              best[sid] = {gain, static_cast<int>(f), thr, g_left, h_left};
            }
          }
        }
        gl[sid] += grad[static_cast<std::size_t>(r)];
        hl[sid] += hess[static_cast<std::size_t>(r)];
        last[sid] = v;
        seen[sid] = 1;
      }
    }

    std::vector<int> next;
    for (int id : frontier) {
      const auto sid = static_cast<std::size_t>(id);
      const auto& b = best[sid];
      if (b.feature < 0) continue;
      const int left = static_cast<int>(tree.nodes.size());
      const int right = left + 1;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[sid];
      node.feature = b.feature;
      node.threshold = b.threshold;
      node.gain = b.gain;
      node.left = left;
      node.right = right;
      node_g.push_back(b.grad_left);
      node_h.push_back(b.hess_left);
      node_g.push_back(node_g[sid] - b.grad_left);
      node_h.push_back(node_h[sid] - b.hess_left);
      next.push_back(left);
      next.push_back(right);
    }
    if (next.empty()) break;
    for (auto r : rows) {
      auto& p = pos[static_cast<std::size_t>(r)];
      const auto& node = tree.nodes[static_cast<std::size_t>(p)];
      if (node.is_leaf()) continue;
      p = x(r, node.feature) <= node.threshold ? node.left : node.right;
    }
    frontier = std::move(next);
  }

  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    auto& node = tree.nodes[i];
    if (!node.is_leaf()) continue;
    const double den = node_h[i] + hp.lambda;
    node.value = den > 0.0 ? -hp.learning_rate * node_g[i] / den : 0.0;
  }
  return tree;
}

std::vector<Eigen::Index> sample_indices(std::mt19937_64& rng, Eigen::Index n, double fraction,
                                         bool bernoulli) {
  std::vector<Eigen::Index> out;
  if (fraction >= 1.0) {
    out.resize(static_cast<std::size_t>(n));
    std::iota(out.begin(), out.end(), Eigen::Index{0});
    return out;
  }
  if (bernoulli) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i)
      if (u(rng) < fraction) out.push_back(i);
    if (out.empty()) out.push_back(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
    return out;
  }
  const auto k = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::lround(fraction * static_cast<double>(n))));
  out.resize(static_cast<std::size_t>(n));
  std::iota(out.begin(), out.end(), Eigen::Index{0});
  std::shuffle(out.begin(), out.end(), rng);
  out.resize(static_cast<std::size_t>(k));
  std::sort(out.begin(), out.end());
  return out;
}

double loss_from_margins(Task task, const Eigen::MatrixXd& margin, const std::vector<int>& y) {
  const auto n = margin.rows();
  if (n == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = y[static_cast<std::size_t>(i)];
    if (task == Task::binary) {
      const double z = margin(i, 0);
      // log(1 + exp(-z)) for y=1, log(1 + exp(z)) for y=0, computed stably.
      const double s = label == 1 ? -z : z;
      total += s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
    } else {
      const Eigen::RowVectorXd row = margin.row(i);
      const double mx = row.maxCoeff();
      const double lse = mx + std::log((row.array() - mx).exp().sum());
      total += lse - row[label];
    }
  }
  return total / static_cast<double>(n);
}

void check_finite(const Matrix& x) {
  if (!x.allFinite()) throw std::invalid_argument("non-finite feature value in training data");
}

}  // namespace

Hyperparams Hyperparams::detector_defaults() {
  Hyperparams hp;
  hp.gamma = 0.01;
  hp.max_depth = 4;
  hp.subsample = 0.819;
  hp.colsample_bytree = 0.514;
  hp.min_child_weight = 5.0;
  hp.learning_rate = 0.409;
  hp.num_rounds = 50;
  hp.lambda = 1.0;
  return hp;
}

void Hyperparams::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("hyperparameter " + what); };
  if (!(gamma >= 0.0)) fail("gamma must be >= 0");
  if (max_depth < 1) fail("max_depth must be >= 1");
  if (!(subsample > 0.0 && subsample <= 1.0)) fail("subsample must be in (0,1]");
  if (!(colsample_bytree > 0.0 && colsample_bytree <= 1.0)) fail("colsample_bytree must be in (0,1]");
  if (!(min_child_weight >= 0.0)) fail("min_child_weight must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) fail("learning_rate must be in (0,1]");
  if (num_rounds < 1) fail("num_rounds must be >= 1");
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (early_stopping_rounds < 0) fail("early_stopping_rounds must be >= 0");
}

json Hyperparams::to_json() const {
  return {{"gamma", gamma},
          {"max_depth", max_depth},
          {"subsample", subsample},
          {"colsample_bytree", colsample_bytree},
          {"min_child_weight", min_child_weight},
          {"learning_rate", learning_rate},
          {"num_rounds", num_rounds},
          {"lambda", lambda},
          {"seed", seed},
          {"early_stopping_rounds", early_stopping_rounds}};
}

Hyperparams Hyperparams::from_json(const json& j) { return from_json(j, Hyperparams{}); }

Hyperparams Hyperparams::from_json(const json& j, const Hyperparams& base) {
  Hyperparams hp = base;
  hp.gamma = j.value("gamma", hp.gamma);
  hp.max_depth = j.value("max_depth", hp.max_depth);
  hp.subsample = j.value("subsample", hp.subsample);
  hp.colsample_bytree = j.value("colsample_bytree", hp.colsample_bytree);
  hp.min_child_weight = j.value("min_child_weight", hp.min_child_weight);
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.num_rounds = j.value("num_rounds", hp.num_rounds);
  hp.lambda = j.value("lambda", hp.lambda);
  hp.seed = j.value("seed", hp.seed);
  hp.early_stopping_rounds = j.value("early_stopping_rounds", hp.early_stopping_rounds);
  hp.validate();
  return hp;
}

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.is_leaf()) continue;
    d[static_cast<std::size_t>(n.left)] = d[i] + 1;
    d[static_cast<std::size_t>(n.right)] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

int DecisionTree::leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return i;
}

std::string_view to_string(Task t) { return t == Task::binary ? "binary" : "multiclass"; }

std::optional<Task> parse_task(std::string_view s) {
  if (s == "binary") return Task::binary;
  if (s == "multiclass") return Task::multiclass;
  return std::nullopt;
}

Eigen::VectorXd BoostedEnsemble::raw_scores(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  const int k = trees_per_round();
  Eigen::VectorXd z = Eigen::VectorXd::Constant(k, task == Task::binary ? base_score : 0.0);
  for (std::size_t t = 0; t < trees.size(); ++t)
    z[static_cast<Eigen::Index>(t % static_cast<std::size_t>(k))] += trees[t].predict(row);
  return z;
}

Eigen::VectorXd BoostedEnsemble::predict_proba_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  Eigen::VectorXd z = raw_scores(row);
  if (task == Task::binary) {
    z[0] = sigmoid(z[0]);
  } else {
    softmax_inplace(z);
  }
  return z;
}

Eigen::MatrixXd BoostedEnsemble::predict_proba(const Matrix& x) const {
  if (x.cols() != static_cast<Eigen::Index>(feature_names.size()))
    throw std::invalid_argument("row width does not match model features");
  Eigen::MatrixXd out(x.rows(), trees_per_round());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = predict_proba_row(x.row(i)).transpose();
  return out;
}

Eigen::MatrixXd BoostedEnsemble::predict_proba(const FeatureMatrix& m) const {
  for (const auto& name : feature_names)
    if (!m.column_index(name)) throw std::invalid_argument("input lacks model feature: " + name);
  const auto aligned = m.select_columns(feature_names);
  return predict_proba(aligned.values);
}

Eigen::VectorXd BoostedEnsemble::predict_score(const FeatureMatrix& m) const {
  if (task != Task::binary) throw std::logic_error("predict_score needs a binary model");
  return predict_proba(m).col(0);
}

ImportanceRanking BoostedEnsemble::feature_importance() const {
  std::vector<double> gain(feature_names.size(), 0.0);
  for (const auto& tree : trees)
    for (const auto& node : tree.nodes)
      if (!node.is_leaf()) gain[static_cast<std::size_t>(node.feature)] += node.gain;
  const double total = std::accumulate(gain.begin(), gain.end(), 0.0);
  ImportanceRanking ranking;
  if (!(total > 0.0)) return ranking;
  for (std::size_t i = 0; i < gain.size(); ++i)
    if (gain[i] > 0.0) ranking.push_back({feature_names[i], gain[i] / total});
  sort_ranking(ranking);
  return ranking;
}

json BoostedEnsemble::to_json() const {
  json jt = json::array();
  for (const auto& tree : trees) {
    json f = json::array(), thr = json::array(), l = json::array(), r = json::array(),
         v = json::array(), g = json::array();
    for (const auto& n : tree.nodes) {
      f.push_back(n.feature);
      thr.push_back(n.threshold);
      l.push_back(n.left);
      r.push_back(n.right);
      v.push_back(n.value);
      g.push_back(n.gain);
    }
    jt.push_back({{"feature", f}, {"threshold", thr}, {"left", l}, {"right", r}, {"value", v}, {"gain", g}});
  }
  return {{"format", kModelFormat},
          {"version", kModelVersion},
          {"task", to_string(task)},
          {"num_class", num_class},
          {"base_score", base_score},
          {"feature_names", feature_names},
          {"hyperparams", hp.to_json()},
          {"training_loss", training_loss},
          {"trees", jt}};
}

BoostedEnsemble BoostedEnsemble::from_json(const json& j) {
  if (j.value("format", std::string{}) != kModelFormat)
    throw std::runtime_error("not a cryptocatch model document");
  if (j.at("version").get<int>() != kModelVersion)
    throw std::runtime_error("unsupported model version");
  BoostedEnsemble m;
  auto task = parse_task(j.at("task").get<std::string>());
  if (!task) throw std::runtime_error("unknown task in model");
  m.task = *task;
  m.num_class = j.at("num_class").get<int>();
  m.base_score = j.at("base_score").get<double>();
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.hp = Hyperparams::from_json(j.at("hyperparams"));
  m.training_loss = j.value("training_loss", std::vector<double>{});
  const int width = static_cast<int>(m.feature_names.size());
  for (const auto& jt : j.at("trees")) {
    DecisionTree t;
    const auto f = jt.at("feature").get<std::vector<int>>();
    const auto thr = jt.at("threshold").get<std::vector<double>>();
    const auto l = jt.at("left").get<std::vector<int>>();
    const auto r = jt.at("right").get<std::vector<int>>();
    const auto v = jt.at("value").get<std::vector<double>>();
    const auto g = jt.at("gain").get<std::vector<double>>();
    const auto n = f.size();
    if (thr.size() != n || l.size() != n || r.size() != n || v.size() != n || g.size() != n || n == 0)
      throw std::runtime_error("inconsistent tree arrays in model");
    for (std::size_t i = 0; i < n; ++i) {
      if (f[i] >= width) throw std::runtime_error("tree references unknown feature");
      if (f[i] >= 0 && (l[i] <= static_cast<int>(i) || r[i] <= static_cast<int>(i) ||
                        l[i] >= static_cast<int>(n) || r[i] >= static_cast<int>(n)))
        throw std::runtime_error("malformed tree links in model");
      t.nodes.push_back({f[i], thr[i], l[i], r[i], v[i], g[i]});
    }
    m.trees.push_back(std::move(t));
  }
  if (m.trees.size() % static_cast<std::size_t>(m.trees_per_round()) != 0)
    throw std::runtime_error("tree count is not a multiple of trees per round");
  return m;
}

void BoostedEnsemble::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model: " + path);
  out << to_json().dump() << '\n';
}

BoostedEnsemble BoostedEnsemble::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read model: " + path);
  return from_json(json::parse(in));
}

DecisionTree grow_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                       std::span<const Eigen::Index> rows, std::span<const Eigen::Index> cols,
                       const Hyperparams& hp) {
  return grow_presorted(x, sort_columns(x), grad, hess, rows, cols, hp);
}

BoostedEnsemble train(const Matrix& x, const std::vector<int>& labels,
                      const std::vector<std::string>& feature_names, const Hyperparams& hp,
                      Task task, int num_class, const ValidationSet& valid) {
  hp.validate();
  const auto n = x.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw std::invalid_argument("label count mismatch");
  if (static_cast<Eigen::Index>(feature_names.size()) != x.cols())
    throw std::invalid_argument("feature name count mismatch");
  check_finite(x);
  const int k = task == Task::binary ? 2 : num_class;
  if (k < 2) throw std::invalid_argument("need at least two classes");
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int y : labels) {
    if (y < 0 || y >= k) throw std::invalid_argument("label out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int c : counts)
    if (c < 2) throw std::invalid_argument("every class needs at least two samples");

  BoostedEnsemble model;
  model.task = task;
  model.num_class = k;
  model.feature_names = feature_names;
  model.hp = hp;
  const int outputs = model.trees_per_round();
  if (task == Task::binary) {
    const double prior = static_cast<double>(counts[1]) / static_cast<double>(n);
    model.base_score = std::log(prior / (1.0 - prior));
  }

  const SortedColumns sorted = sort_columns(x);
  std::mt19937_64 rng(hp.seed);
  Eigen::MatrixXd margin(n, outputs);
  margin.setConstant(task == Task::binary ? model.base_score : 0.0);

  const bool validating = valid.x && valid.labels && hp.early_stopping_rounds > 0;
  Eigen::MatrixXd valid_margin;
  if (validating) {
    valid_margin.resize(valid.x->rows(), outputs);
    valid_margin.setConstant(task == Task::binary ? model.base_score : 0.0);
  }
  double best_valid = std::numeric_limits<double>::infinity();
  std::size_t best_rounds = 0;
  int since_best = 0;

  std::vector<double> grad(static_cast<std::size_t>(n)), hess(static_cast<std::size_t>(n));
  Eigen::VectorXd p(outputs);
  for (int round = 0; round < hp.num_rounds; ++round) {
    Eigen::MatrixXd prob(n, outputs);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (task == Task::binary) {
        prob(i, 0) = sigmoid(margin(i, 0));
      } else {
        p = margin.row(i).transpose();
        softmax_inplace(p);
        prob.row(i) = p.transpose();
      }
    }
    for (int c = 0; c < outputs; ++c) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto si = static_cast<std::size_t>(i);
        const double pi = prob(i, c);
        const double yi = task == Task::binary ? labels[si] : (labels[si] == c ? 1.0 : 0.0);
        grad[si] = pi - yi;
        // Softmax uses the diagonal bound 2p(1-p) so simultaneous per-class
        // steps cannot overshoot.
        const double h = task == Task::binary ? pi * (1.0 - pi) : 2.0 * pi * (1.0 - pi);
        hess[si] = std::max(h, kMinHessian);
      }
      const auto rows = sample_indices(rng, n, hp.subsample, true);
      const auto cols = sample_indices(rng, x.cols(), hp.colsample_bytree, false);
      DecisionTree tree = grow_presorted(x, sorted, grad, hess, rows, cols, hp);
      for (Eigen::Index i = 0; i < n; ++i) margin(i, c) += tree.predict(x.row(i));
      if (validating)
        for (Eigen::Index i = 0; i < valid.x->rows(); ++i)
          valid_margin(i, c) += tree.predict(valid.x->row(i));
      model.trees.push_back(std::move(tree));
    }
    model.training_loss.push_back(loss_from_margins(task, margin, labels));

    if (validating) {
      const double vl = loss_from_margins(task, valid_margin, *valid.labels);
      if (vl < best_valid) {
        best_valid = vl;
        best_rounds = model.rounds();
        since_best = 0;
      } else if (++since_best >= hp.early_stopping_rounds) {
        model.trees.resize(best_rounds * static_cast<std::size_t>(outputs));
        model.training_loss.resize(best_rounds);
        break;
      }
    }
  }
  return model;
}

BoostedEnsemble train(const FeatureMatrix& m, const std::vector<int>& labels, const Hyperparams& hp,
                      Task task, int num_class) {
  return train(m.values, labels, m.names, hp, task, num_class);
}

double ensemble_loss(const BoostedEnsemble& model, const Matrix& x, const std::vector<int>& labels) {
  Eigen::MatrixXd margin(x.rows(), model.trees_per_round());
  for (Eigen::Index i = 0; i < x.rows(); ++i) margin.row(i) = model.raw_scores(x.row(i)).transpose();
  return loss_from_margins(model.task, margin, labels);
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("need at least two folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<int> fold_of(labels.size(), -1);
  std::mt19937_64 rng(seed);
  for (auto& [cls, idx] : by_class) {
    if (static_cast<int>(idx.size()) < folds)
      throw std::invalid_argument("class " + std::to_string(cls) + " has fewer samples than folds");
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < idx.size(); ++i) fold_of[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  }
  return fold_of;
}

CrossValidation cross_validate(const Matrix& x, const std::vector<int>& labels,
                               const std::vector<std::string>& feature_names,
                               const Hyperparams& hp, Task task, int num_class, int folds,
                               std::uint64_t seed) {
  CrossValidation cv;
  cv.fold_of = stratified_folds(labels, folds, seed);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train_rows, test_rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
      (cv.fold_of[i] == f ? test_rows : train_rows).push_back(static_cast<Eigen::Index>(i));
    Matrix xtr(static_cast<Eigen::Index>(train_rows.size()), x.cols());
    Matrix xte(static_cast<Eigen::Index>(test_rows.size()), x.cols());
    std::vector<int> ytr, yte;
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      xtr.row(static_cast<Eigen::Index>(i)) = x.row(train_rows[i]);
      ytr.push_back(labels[static_cast<std::size_t>(train_rows[i])]);
    }
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      xte.row(static_cast<Eigen::Index>(i)) = x.row(test_rows[i]);
      yte.push_back(labels[static_cast<std::size_t>(test_rows[i])]);
    }
    const auto model = train(xtr, ytr, feature_names, hp, task, num_class);
    const Eigen::MatrixXd proba = model.predict_proba(xte);

    FoldMetrics m;
    if (task == Task::binary) {
      std::vector<ScoredSample> scored;
      for (std::size_t i = 0; i < yte.size(); ++i)
        scored.push_back({proba(static_cast<Eigen::Index>(i), 0), yte[i] == 1});
      const auto c = confusion_and_prf(scored, 0.5);
      m.precision = c.precision;
      m.recall = c.recall;
      m.f1 = c.f1;
      m.auc = roc_auc(scored).auc;
      m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(scored.size());
    } else {
      m.accuracy = accuracy(yte, proba);
      m.mlogloss = mlogloss(MulticlassEvalBatch::from_labels(yte, proba));
    }
    cv.folds.push_back(m);
  }
  const double kf = static_cast<double>(folds);
  for (const auto& m : cv.folds) {
    cv.mean.precision += m.precision / kf;
    cv.mean.recall += m.recall / kf;
    cv.mean.f1 += m.f1 / kf;
    cv.mean.auc += m.auc / kf;
    cv.mean.accuracy += m.accuracy / kf;
    cv.mean.mlogloss += m.mlogloss / kf;
  }
  return cv;
}

}  // namespace cryptocatch
