#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ridgebench/features/feature_vector.hpp"

namespace rb {

/// Samples × features, row-major so a row is one feature vector.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Class indices: 0 = male, 1 = female. Ties always resolve to 0.
using Labels = std::vector<int>;

FeatureMatrix to_feature_matrix(const std::vector<FeatureVector>& rows);

enum class Algorithm { adaboost, svm_linear, svm_rbf, svm_poly, knn, c45, fcnet, id3, lda };

/// Column order of the benchmark grid.
inline constexpr std::array<Algorithm, 9> kAllAlgorithms = {
    Algorithm::adaboost, Algorithm::svm_linear, Algorithm::svm_rbf,
    Algorithm::svm_poly, Algorithm::knn,        Algorithm::c45,
    Algorithm::fcnet,    Algorithm::id3,        Algorithm::lda};

std::string_view to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);

/// Raised when training labels contain a single class.
class DegenerateLabelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FeatureDimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BoostParams {
  std::size_t n_estimators = 100;
  double learning_rate = 0.01;
  std::size_t max_depth = 7;
  double subsample = 1.0;
};

struct SvmParams {
  double c = 100.0;       // kernel SVMs
  double linear_c = 1.0;  // squared-hinge linear SVM
  double gamma = 0.5;
  int degree = 3;
  double coef0 = 1.0;
  double tolerance = 1e-3;
};

struct FcNetParams {
  std::vector<std::size_t> hidden{256, 64};
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
};

struct ClassifierConfig {
  Algorithm algorithm = Algorithm::knn;
  BoostParams boost;
  SvmParams svm;
  std::size_t k = 1;
  FcNetParams fcnet;

  static ClassifierConfig defaults(Algorithm a);
  nlohmann::json to_json() const;
  /// Reads the keys present in `j` over the defaults for `a`.
  static ClassifierConfig from_json(Algorithm a, const nlohmann::json& j);
};

/// Per-feature z-score followed by a global 1/√d factor, so squared distances
/// between standardized vectors stay O(1) regardless of dimension.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // multiplies (x − mean)

  static Standardizer fit(const FeatureMatrix& x);
  FeatureMatrix apply(const FeatureMatrix& x) const;
  /// Equivalent per-column affine map x·scale + shift.
  Eigen::RowVectorXd shift() const { return -mean.cwiseProduct(scale); }
  nlohmann::json to_json() const;
};

class Classifier {
 public:
  virtual ~Classifier() = default;

  /// Requires ≥ 2 rows, both classes, one label per row.
  void fit(const FeatureMatrix& x, const Labels& y, std::uint64_t seed);
  Labels predict(const FeatureMatrix& x) const;
  nlohmann::json to_json() const;

  virtual Algorithm algorithm() const = 0;
  std::size_t feature_dim() const { return feature_dim_; }
  /// Non-fatal notes raised while fitting (e.g. covariance regularization).
  const std::vector<std::string>& warnings() const { return warnings_; }

 protected:
  virtual void fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t seed) = 0;
  virtual Labels predict_impl(const FeatureMatrix& x) const = 0;
  virtual nlohmann::json params_json() const = 0;
  void warn(std::string message) { warnings_.push_back(std::move(message)); }

 private:
  std::size_t feature_dim_ = 0;
  bool fitted_ = false;
  std::vector<std::string> warnings_;
};

std::unique_ptr<Classifier> make_classifier(const ClassifierConfig& cfg);
std::unique_ptr<Classifier> fit_classifier(const FeatureMatrix& x, const Labels& y,
                                           const ClassifierConfig& cfg, std::uint64_t seed);

double accuracy(const Labels& truth, const Labels& predicted);

}  // namespace rb
