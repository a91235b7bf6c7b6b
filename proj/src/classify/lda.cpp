#include "ridgebench/classify/lda.hpp"

#include <cmath>
#include <string>

namespace rb {

LdaModel lda_fit(const FeatureMatrix& x, const Labels& y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw FeatureDimensionError("lda_fit: one label per row required");
  }
  const Eigen::Index d = x.cols();
  Eigen::RowVectorXd mu0 = Eigen::RowVectorXd::Zero(d), mu1 = Eigen::RowVectorXd::Zero(d);
  double n0 = 0.0, n1 = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (y[static_cast<std::size_t>(i)] == 1) {
      mu1 += x.row(i);
      n1 += 1.0;
    } else {
      mu0 += x.row(i);
      n0 += 1.0;
    }
  }
  if (n0 == 0.0 || n1 == 0.0) throw DegenerateLabelError("lda_fit: both classes required");
  mu0 /= n0;
  mu1 /= n1;

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  Eigen::RowVectorXd centered(d);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    centered = x.row(i) - (y[static_cast<std::size_t>(i)] == 1 ? mu1 : mu0);
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  }
  const double n = n0 + n1;
  Eigen::MatrixXd within = scatter.selfadjointView<Eigen::Lower>();
  within /= std::max(1.0, n - 2.0);
  const Eigen::VectorXd delta = (mu1 - mu0).transpose();

  LdaModel model;
  bool singular = static_cast<double>(d) > n - 2.0;
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!singular) {
    llt.compute(within);
    if (llt.info() != Eigen::Success) {
      singular = true;
    } else {
      const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
      const double lo = diag.minCoeff(), hi = diag.maxCoeff();
      singular = !(lo * lo > 1e-12 * hi * hi);
    }
  }
  if (singular) {
    const double trace = within.trace();
    model.ridge = trace > 0.0 ? 1e-6 * trace / static_cast<double>(d) : 1e-6;
    within.diagonal().array() += model.ridge;
    llt.compute(within);
  }
  model.direction = llt.solve(delta);
  const double prior_ratio = n1 / n0;
  model.threshold = 0.5 * model.direction.dot((mu0 + mu1).transpose()) - std::log(prior_ratio);
  return model;
}

void LdaClassifier::fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t) {
  standardizer_ = Standardizer::fit(x);
  model_ = lda_fit(standardizer_.apply(x), y);
  if (model_.ridge > 0.0) {
    warn("lda: within-class covariance is singular; added ridge " + std::to_string(model_.ridge));
  }
}

Labels LdaClassifier::predict_impl(const FeatureMatrix& x) const {
  const Eigen::VectorXd projection = standardizer_.apply(x) * model_.direction;
  Labels out(static_cast<std::size_t>(projection.size()));
  for (Eigen::Index i = 0; i < projection.size(); ++i) {
    out[static_cast<std::size_t>(i)] = projection(i) > model_.threshold ? 1 : 0;
  }
  return out;
}

nlohmann::json LdaClassifier::params_json() const {
  return {{"direction", std::vector<double>(model_.direction.data(),
                                            model_.direction.data() + model_.direction.size())},
          {"threshold", model_.threshold},
          {"ridge", model_.ridge},
          {"standardizer", standardizer_.to_json()}};
}

}  // namespace rb
