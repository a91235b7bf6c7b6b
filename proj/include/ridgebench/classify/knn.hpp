#pragma once

#include "ridgebench/classify/classifier.hpp"

namespace rb {

/// k-nearest neighbours under Euclidean distance on standardized features.
/// Equal distances prefer the lower training index; tied votes go to class 0.
class KnnClassifier final : public Classifier {
 public:
  explicit KnnClassifier(std::size_t k) : k_(k) {}
  Algorithm algorithm() const override { return Algorithm::knn; }

  /// Training-row indices of the k nearest neighbours of each query, nearest first.
  std::vector<std::vector<std::size_t>> neighbors(const FeatureMatrix& queries) const;
  const Standardizer& standardizer() const { return standardizer_; }

 protected:
  void fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t seed) override;
  Labels predict_impl(const FeatureMatrix& x) const override;
  nlohmann::json params_json() const override;

 private:
  std::size_t k_;
  Standardizer standardizer_;
  FeatureMatrix train_;
  Eigen::VectorXd train_norms_;
  Labels labels_;
};

}  // namespace rb
