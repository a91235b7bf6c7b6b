#pragma once

#include "ridgebench/classify/classifier.hpp"

namespace rb {

struct LdaModel {
  /// S_w⁻¹(μ₁ − μ₀), with S_w the pooled within-class covariance (divisor n − 2).
  Eigen::VectorXd direction;
  /// wᵀ(μ₀ + μ₁)/2 − log(π₁/π₀); class 1 when wᵀx > threshold.
  double threshold = 0.0;
  /// Ridge added to S_w's diagonal, 0 when S_w was well conditioned.
  double ridge = 0.0;
};

/// Fisher discriminant on raw features. A singular or ill-conditioned S_w is
/// replaced by S_w + λI with λ = 1e-6·trace(S_w)/d.
LdaModel lda_fit(const FeatureMatrix& x, const Labels& y);

class LdaClassifier final : public Classifier {
 public:
  Algorithm algorithm() const override { return Algorithm::lda; }
  const LdaModel& model() const { return model_; }

 protected:
  void fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t seed) override;
  Labels predict_impl(const FeatureMatrix& x) const override;
  nlohmann::json params_json() const override;

 private:
  Standardizer standardizer_;
  LdaModel model_;
};

}  // namespace rb
