#include "ridgebench/classify/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace rb {

double binary_entropy(double positives, double total) {
  if (total <= 0.0) return 0.0;
  const double p = positives / total;
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

namespace {

using RowList = std::vector<std::uint32_t>;
using SortedLists = std::vector<RowList>;

double split_score(SplitCriterion criterion, double n, double s, double nl, double sl) {
  const double nr = n - nl;
  const double sr = s - sl;
  switch (criterion) {
    case SplitCriterion::squared_error:
      return sl * sl / nl + sr * sr / nr - s * s / n;
    case SplitCriterion::info_gain:
    case SplitCriterion::gain_ratio: {
      const double gain = binary_entropy(s, n) - (nl / n) * binary_entropy(sl, nl) -
                          (nr / n) * binary_entropy(sr, nr);
      if (criterion == SplitCriterion::info_gain) return gain;
      return gain / binary_entropy(nl, n);
    }
  }
  return 0.0;
}

double midpoint(double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  return mid >= hi ? lo : mid;
}

// Scans one feature's ascending row order. Returns the best score, or −inf
// when the feature is constant. With `cutoff` set, stops at the first
// threshold whose score reaches it and reports that threshold.
double scan_feature(const FeatureMatrix& x, std::span<const double> targets, std::size_t feature,
                    const RowList& order, SplitCriterion criterion, double total,
                    std::optional<double> cutoff, double* threshold) {
  const double n = static_cast<double>(order.size());
  double best = -std::numeric_limits<double>::infinity();
  double sl = 0.0;
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    sl += targets[order[k]];
    const double lo = x(order[k], static_cast<Eigen::Index>(feature));
    const double hi = x(order[k + 1], static_cast<Eigen::Index>(feature));
    if (!(hi > lo)) continue;
    const double score = split_score(criterion, n, total, static_cast<double>(k + 1), sl);
    if (cutoff && score >= *cutoff) {
      if (threshold) *threshold = midpoint(lo, hi);
      return score;
    }
    best = std::max(best, score);
  }
  return best;
}

std::optional<SplitChoice> select_split(const FeatureMatrix& x, std::span<const double> targets,
                                        const SortedLists& sorted, SplitCriterion criterion) {
  if (sorted.empty() || sorted.front().size() < 2) return std::nullopt;
  double total = 0.0;
  for (auto r : sorted.front()) total += targets[r];

  std::vector<double> feature_best(sorted.size());
  double overall = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < sorted.size(); ++f) {
    feature_best[f] = scan_feature(x, targets, f, sorted[f], criterion, total, std::nullopt, nullptr);
    overall = std::max(overall, feature_best[f]);
  }
  if (std::isinf(overall)) return std::nullopt;
  const double cutoff = overall - kSplitTieTolerance;
  for (std::size_t f = 0; f < sorted.size(); ++f) {
    if (feature_best[f] < cutoff) continue;
    SplitChoice choice;
    choice.feature = f;
    choice.score = scan_feature(x, targets, f, sorted[f], criterion, total, cutoff, &choice.threshold);
    return choice;
  }
  return std::nullopt;
}

SortedLists presort(const FeatureMatrix& x, std::span<const std::size_t> rows) {
  RowList base;
  if (rows.empty()) {
    base.resize(static_cast<std::size_t>(x.rows()));
    std::iota(base.begin(), base.end(), 0u);
  } else {
    base.assign(rows.begin(), rows.end());
    std::sort(base.begin(), base.end());
  }
  SortedLists sorted(static_cast<std::size_t>(x.cols()), base);
  for (std::size_t f = 0; f < sorted.size(); ++f) {
    const auto col = static_cast<Eigen::Index>(f);
    std::stable_sort(sorted[f].begin(), sorted[f].end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x(a, col) < x(b, col); });
  }
  return sorted;
}

void check_targets(const FeatureMatrix& x, std::span<const double> targets) {
  if (targets.size() != static_cast<std::size_t>(x.rows())) {
    throw FeatureDimensionError("tree: one target per row required");
  }
  if (x.cols() == 0) throw FeatureDimensionError("tree: zero-width features");
}

class Grower {
 public:
  Grower(const FeatureMatrix& x, std::span<const double> targets, const TreeOptions& options)
      : x_(x), targets_(targets), options_(options), goes_left_(static_cast<std::size_t>(x.rows()), 0) {}

  std::vector<TreeNode> run(SortedLists sorted) {
    grow(std::move(sorted), 0);
    return std::move(nodes_);
  }

 private:
  int grow(SortedLists sorted, std::size_t depth) {
    const RowList& rows = sorted.front();
    TreeNode node;
    node.depth = depth;
    node.samples = rows.size();
    bool constant = true;
    for (auto r : rows) {
      node.target_sum += targets_[r];
      constant = constant && targets_[r] == targets_[rows.front()];
    }
    const double n = static_cast<double>(rows.size());
    if (options_.criterion == SplitCriterion::squared_error) {
      node.value = node.target_sum / n;
    } else {
      node.value = node.target_sum > n - node.target_sum ? 1.0 : 0.0;
    }
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(node);

    const bool depth_ok = options_.max_depth == 0 || depth < options_.max_depth;
    if (constant || !depth_ok) return index;
    const auto split = select_split(x_, targets_, sorted, options_.criterion);
    if (!split) return index;

    const auto col = static_cast<Eigen::Index>(split->feature);
    for (auto r : rows) goes_left_[r] = x_(r, col) <= split->threshold ? 1 : 0;
    SortedLists left(sorted.size()), right(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      for (auto r : sorted[f]) (goes_left_[r] ? left[f] : right[f]).push_back(r);
      RowList().swap(sorted[f]);
    }
    nodes_[static_cast<std::size_t>(index)].feature = static_cast<int>(split->feature);
    nodes_[static_cast<std::size_t>(index)].threshold = split->threshold;
    const int l = grow(std::move(left), depth + 1);
    nodes_[static_cast<std::size_t>(index)].left = l;
    const int r = grow(std::move(right), depth + 1);
    nodes_[static_cast<std::size_t>(index)].right = r;
    return index;
  }

  const FeatureMatrix& x_;
  std::span<const double> targets_;
  TreeOptions options_;
  std::vector<char> goes_left_;
  std::vector<TreeNode> nodes_;
};

std::vector<double> labels_as_targets(const Labels& y) { return {y.begin(), y.end()}; }

}  // namespace

std::optional<SplitChoice> best_split(const FeatureMatrix& x, std::span<const double> targets,
                                      SplitCriterion criterion, std::span<const std::size_t> rows) {
  check_targets(x, targets);
  return select_split(x, targets, presort(x, rows), criterion);
}

std::optional<SplitChoice> best_split(const FeatureMatrix& x, const Labels& y,
                                      SplitCriterion criterion) {
  const auto targets = labels_as_targets(y);
  return best_split(x, std::span<const double>(targets), criterion);
}

// ---------------------------------------------------------------------------

DecisionTree DecisionTree::grow(const FeatureMatrix& x, std::span<const double> targets,
                                const TreeOptions& options, std::span<const std::size_t> rows) {
  check_targets(x, targets);
  if (x.rows() == 0) throw std::invalid_argument("tree: no rows");
  DecisionTree tree;
  tree.nodes_ = Grower(x, targets, options).run(presort(x, rows));
  return tree;
}

std::size_t DecisionTree::leaf_index(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(row(n.feature) <= n.threshold ? n.left : n.right);
  }
  return i;
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

nlohmann::json DecisionTree::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& n : nodes_) {
    arr.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.samples});
  }
  return {{"columns", {"feature", "threshold", "left", "right", "value", "samples"}}, {"nodes", arr}};
}

// ---------------------------------------------------------------------------

TreeClassifier::TreeClassifier(Algorithm algorithm) : algorithm_(algorithm) {
  if (algorithm != Algorithm::id3 && algorithm != Algorithm::c45) {
    throw std::invalid_argument("TreeClassifier: algorithm must be id3 or c45");
  }
}

void TreeClassifier::fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t) {
  TreeOptions options;
  options.criterion = algorithm_ == Algorithm::id3 ? SplitCriterion::info_gain
                                                   : SplitCriterion::gain_ratio;
  const auto targets = labels_as_targets(y);
  tree_ = DecisionTree::grow(x, targets, options);
}

Labels TreeClassifier::predict_impl(const FeatureMatrix& x) const {
  Labels out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = tree_.predict_value(x.row(i)) > 0.5 ? 1 : 0;
  }
  return out;
}

nlohmann::json TreeClassifier::params_json() const {
  return {{"criterion", algorithm_ == Algorithm::id3 ? "info_gain" : "gain_ratio"},
          {"pruning", false},
          {"tree", tree_.to_json()}};
}

// ---------------------------------------------------------------------------

namespace {

double logistic(double f) {
  return f >= 0.0 ? 1.0 / (1.0 + std::exp(-f)) : std::exp(f) / (1.0 + std::exp(f));
}

double softplus(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

double mean_log_loss(const Eigen::VectorXd& f, const Labels& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double fi = f(static_cast<Eigen::Index>(i));
    total += softplus(y[i] == 1 ? -fi : fi);
  }
  return total / static_cast<double>(y.size());
}

}  // namespace

void BoostedTrees::fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t seed) {
  if (params_.n_estimators == 0) throw std::invalid_argument("boosting: n_estimators must be ≥ 1");
  if (!(params_.subsample > 0.0 && params_.subsample <= 1.0)) {
    throw std::invalid_argument("boosting: subsample must be in (0, 1]");
  }
  if (!(params_.learning_rate > 0.0)) throw std::invalid_argument("boosting: learning_rate must be positive");

  const std::size_t n = y.size();
  const double positives = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const double prior = positives / static_cast<double>(n);
  initial_ = std::log(prior / (1.0 - prior));
  trees_.clear();
  stage_loss_.clear();

  Eigen::VectorXd f = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), initial_);
  stage_loss_.push_back(mean_log_loss(f, y));

  const SortedLists all_sorted = presort(x, {});
  const std::size_t sample_size =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(params_.subsample * static_cast<double>(n))));
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::vector<char> in_sample(n, 1);

  TreeOptions options;
  options.criterion = SplitCriterion::squared_error;
  options.max_depth = params_.max_depth;
  std::vector<double> residual(n), curvature(n);

  for (std::size_t stage = 0; stage < params_.n_estimators; ++stage) {
    SortedLists sorted;
    if (sample_size < n) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      std::fill(in_sample.begin(), in_sample.end(), 0);
      for (std::size_t k = 0; k < sample_size; ++k) in_sample[order[k]] = 1;
      sorted.resize(all_sorted.size());
      for (std::size_t c = 0; c < all_sorted.size(); ++c) {
        for (auto r : all_sorted[c]) {
          if (in_sample[r]) sorted[c].push_back(r);
        }
      }
    } else {
      sorted = all_sorted;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double p = logistic(f(static_cast<Eigen::Index>(i)));
      residual[i] = static_cast<double>(y[i]) - p;
      curvature[i] = p * (1.0 - p);
    }
    DecisionTree tree;
    tree.mutable_nodes() = Grower(x, residual, options).run(std::move(sorted));
    if (stage == 0 && tree.nodes().size() == 1) {
      warn("boosting: first stage tree has no split (all features constant)");
    }

    auto& nodes = tree.mutable_nodes();
    std::vector<double> numerator(nodes.size(), 0.0), denominator(nodes.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_sample[i]) continue;
      const auto leaf = tree.leaf_index(x.row(static_cast<Eigen::Index>(i)));
      numerator[leaf] += residual[i];
      denominator[leaf] += curvature[i];
    }
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (!nodes[k].is_leaf()) continue;
      nodes[k].value = std::abs(denominator[k]) < 1e-150 ? 0.0 : numerator[k] / denominator[k];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = x.row(static_cast<Eigen::Index>(i));
      f(static_cast<Eigen::Index>(i)) += params_.learning_rate * tree.predict_value(row);
    }
    trees_.push_back(std::move(tree));
    stage_loss_.push_back(mean_log_loss(f, y));
  }
}

Eigen::VectorXd BoostedTrees::decision_values(const FeatureMatrix& x) const {
  Eigen::VectorXd f = Eigen::VectorXd::Constant(x.rows(), initial_);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (const auto& tree : trees_) f(i) += params_.learning_rate * tree.predict_value(x.row(i));
  }
  return f;
}

Labels BoostedTrees::predict_staged(const FeatureMatrix& x, std::size_t stages) const {
  stages = std::min(stages, trees_.size());
  Labels out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double f = initial_;
    for (std::size_t s = 0; s < stages; ++s) f += params_.learning_rate * trees_[s].predict_value(x.row(i));
    out[static_cast<std::size_t>(i)] = f > 0.0 ? 1 : 0;
  }
  return out;
}

Labels BoostedTrees::predict_impl(const FeatureMatrix& x) const {
  return predict_staged(x, trees_.size());
}

nlohmann::json BoostedTrees::params_json() const {
  auto trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"loss", "logistic"},
          {"n_estimators", params_.n_estimators},
          {"learning_rate", params_.learning_rate},
          {"max_depth", params_.max_depth},
          {"subsample", params_.subsample},
          {"initial_score", initial_},
          {"stage_loss", stage_loss_},
          {"trees", trees}};
}

}  // namespace rb
