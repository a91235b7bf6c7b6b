#pragma once

#include "ridgebench/classify/classifier.hpp"
#include "ridgebench/tensor/nn.hpp"

namespace rb {

/// Fully connected network d → hidden… → 2 with leaky relu, trained with
/// softmax cross-entropy and Adam on standardized features.
class FcNetClassifier final : public Classifier {
 public:
  explicit FcNetClassifier(FcNetParams params) : params_(std::move(params)) {}
  Algorithm algorithm() const override { return Algorithm::fcnet; }

  /// Differentiable class scores [N,2] for raw features [N,d]; the
  /// standardization is applied inside the graph.
  Tensor logits(const Tensor& features) const;
  Eigen::MatrixXd scores(const FeatureMatrix& x) const;
  /// Mean training loss per epoch.
  const std::vector<double>& epoch_loss() const { return epoch_loss_; }

 protected:
  void fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t seed) override;
  Labels predict_impl(const FeatureMatrix& x) const override;
  nlohmann::json params_json() const override;

 private:
  FcNetParams params_;
  Standardizer standardizer_;
  std::vector<Linear> layers_;
  std::vector<double> epoch_loss_;
};

}  // namespace rb
