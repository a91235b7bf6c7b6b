#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ridgebench/classify/classifier.hpp"

namespace rb {

enum class SplitCriterion { info_gain, gain_ratio, squared_error };

struct SplitChoice {
  std::size_t feature = 0;
  /// Rows with x[feature] ≤ threshold go left.
  double threshold = 0.0;
  double score = 0.0;
};

/// Scores closer than this to the best are ties; ties go to the lowest
/// feature, then the lowest threshold.
inline constexpr double kSplitTieTolerance = 1e-12;

/// Shannon entropy in bits of a two-class node with `positives` of `total`.
double binary_entropy(double positives, double total);

/// Best split of `rows` (all rows when empty) over every feature and every
/// midpoint between consecutive distinct sorted values. For the entropy
/// criteria `targets` holds 0/1 labels; for squared_error any real values.
/// Returns nullopt when every feature is constant on the rows.
std::optional<SplitChoice> best_split(const FeatureMatrix& x, std::span<const double> targets,
                                      SplitCriterion criterion,
                                      std::span<const std::size_t> rows = {});

/// Same for integer class labels.
std::optional<SplitChoice> best_split(const FeatureMatrix& x, const Labels& y,
                                      SplitCriterion criterion);

struct TreeNode {
  int feature = -1;  // −1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::size_t samples = 0;
  double target_sum = 0.0;
  double value = 0.0;  // leaf output
  std::size_t depth = 0;

  bool is_leaf() const { return feature < 0; }
};

struct TreeOptions {
  SplitCriterion criterion = SplitCriterion::info_gain;
  /// 0 means unlimited.
  std::size_t max_depth = 0;
};

/// Binary tree grown depth-first. Nodes split whenever their targets are not
/// all equal, the depth allows it and some feature is non-constant, even when
/// the best split has zero gain. No pruning.
class DecisionTree {
 public:
  /// Leaf value is the majority label for entropy criteria (ties → 0) and the
  /// target mean for squared_error.
  static DecisionTree grow(const FeatureMatrix& x, std::span<const double> targets,
                           const TreeOptions& options, std::span<const std::size_t> rows = {});

  std::size_t leaf_index(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  double predict_value(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    return nodes_[leaf_index(row)].value;
  }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::vector<TreeNode>& mutable_nodes() { return nodes_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;
  nlohmann::json to_json() const;

 private:
  std::vector<TreeNode> nodes_;
};

/// ID3 (information gain) or C4.5 (gain ratio) on raw features.
class TreeClassifier final : public Classifier {
 public:
  explicit TreeClassifier(Algorithm algorithm);
  Algorithm algorithm() const override { return algorithm_; }
  const DecisionTree& tree() const { return tree_; }

 protected:
  void fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t seed) override;
  Labels predict_impl(const FeatureMatrix& x) const override;
  nlohmann::json params_json() const override;

 private:
  Algorithm algorithm_;
  DecisionTree tree_;
};

/// Gradient boosting with logistic loss: F₀ = prior log-odds; each stage fits a
/// least-squares regression tree to the residuals y − p on a subsample drawn
/// without replacement, sets each leaf to the Newton step Σr / Σp(1 − p) and
/// adds it scaled by the learning rate.
class BoostedTrees final : public Classifier {
 public:
  explicit BoostedTrees(BoostParams params) : params_(params) {}
  Algorithm algorithm() const override { return Algorithm::adaboost; }

  Eigen::VectorXd decision_values(const FeatureMatrix& x) const;
  /// Labels from the first `stages` trees only.
  Labels predict_staged(const FeatureMatrix& x, std::size_t stages) const;
  /// Mean training log-loss after each stage (entry 0 is the prior).
  const std::vector<double>& stage_loss() const { return stage_loss_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  double initial_score() const { return initial_; }

 protected:
  void fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t seed) override;
  Labels predict_impl(const FeatureMatrix& x) const override;
  nlohmann::json params_json() const override;

 private:
  BoostParams params_;
  double initial_ = 0.0;
  std::vector<DecisionTree> trees_;
  std::vector<double> stage_loss_;
};

}  // namespace rb
