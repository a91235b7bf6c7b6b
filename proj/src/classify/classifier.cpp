#include "ridgebench/classify/classifier.hpp"

#include <cmath>
#include <set>

#include "ridgebench/classify/fcnet.hpp"
#include "ridgebench/classify/knn.hpp"
#include "ridgebench/classify/lda.hpp"
#include "ridgebench/classify/svm.hpp"
#include "ridgebench/classify/tree.hpp"

namespace rb {

FeatureMatrix to_feature_matrix(const std::vector<FeatureVector>& rows) {
  const std::size_t d = rows.empty() ? 0 : rows.front().length();
  FeatureMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].length() != d) {
      throw FeatureDimensionError("to_feature_matrix: row " + std::to_string(i) + " has length " +
                                  std::to_string(rows[i].length()) + ", expected " + std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].values[j];
    }
  }
  return m;
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::adaboost: return "adaboost";
    case Algorithm::svm_linear: return "svm_linear";
    case Algorithm::svm_rbf: return "svm_rbf";
    case Algorithm::svm_poly: return "svm_poly";
    case Algorithm::knn: return "knn";
    case Algorithm::c45: return "c45";
    case Algorithm::fcnet: return "fcnet";
    case Algorithm::id3: return "id3";
    case Algorithm::lda: return "lda";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (auto a : kAllAlgorithms) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

ClassifierConfig ClassifierConfig::defaults(Algorithm a) {
  ClassifierConfig cfg;
  cfg.algorithm = a;
  return cfg;
}

nlohmann::json ClassifierConfig::to_json() const {
  nlohmann::json j;
  switch (algorithm) {
    case Algorithm::adaboost:
      j = {{"n_estimators", boost.n_estimators},
           {"learning_rate", boost.learning_rate},
           {"max_depth", boost.max_depth},
           {"subsample", boost.subsample}};
      break;
    case Algorithm::svm_linear:
      j = {{"C", svm.linear_c}};
      break;
    case Algorithm::svm_rbf:
    case Algorithm::svm_poly:
      j = {{"C", svm.c}, {"gamma", svm.gamma}, {"tolerance", svm.tolerance}};
      if (algorithm == Algorithm::svm_poly) {
        j["degree"] = svm.degree;
        j["coef0"] = svm.coef0;
      }
      break;
    case Algorithm::knn:
      j = {{"k", k}};
      break;
    case Algorithm::fcnet:
      j = {{"hidden", fcnet.hidden},
           {"epochs", fcnet.epochs},
           {"batch_size", fcnet.batch_size},
           {"learning_rate", fcnet.learning_rate}};
      break;
    case Algorithm::c45:
    case Algorithm::id3:
    case Algorithm::lda:
      j = nlohmann::json::object();
      break;
  }
  return {{"algorithm", std::string(to_string(algorithm))}, {"params", j}};
}

ClassifierConfig ClassifierConfig::from_json(Algorithm a, const nlohmann::json& j) {
  ClassifierConfig cfg = defaults(a);
  if (j.is_null()) return cfg;
  if (!j.is_object()) throw std::invalid_argument("classifier params must be an object");
  std::set<std::string> allowed;
  switch (a) {
    case Algorithm::adaboost: allowed = {"n_estimators", "learning_rate", "max_depth", "subsample"}; break;
    case Algorithm::svm_linear: allowed = {"C"}; break;
    case Algorithm::svm_rbf: allowed = {"C", "gamma", "tolerance"}; break;
    case Algorithm::svm_poly: allowed = {"C", "gamma", "tolerance", "degree", "coef0"}; break;
    case Algorithm::knn: allowed = {"k"}; break;
    case Algorithm::fcnet: allowed = {"hidden", "epochs", "batch_size", "learning_rate"}; break;
    default: break;
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw std::invalid_argument("unknown parameter '" + key + "' for " + std::string(to_string(a)));
    }
  }
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  switch (a) {
    case Algorithm::adaboost:
      read("n_estimators", cfg.boost.n_estimators);
      read("learning_rate", cfg.boost.learning_rate);
      read("max_depth", cfg.boost.max_depth);
      read("subsample", cfg.boost.subsample);
      break;
    case Algorithm::svm_linear:
      read("C", cfg.svm.linear_c);
      break;
    case Algorithm::svm_rbf:
    case Algorithm::svm_poly:
      read("C", cfg.svm.c);
      read("gamma", cfg.svm.gamma);
      read("tolerance", cfg.svm.tolerance);
      read("degree", cfg.svm.degree);
      read("coef0", cfg.svm.coef0);
      break;
    case Algorithm::knn:
      read("k", cfg.k);
      if (cfg.k == 0) throw std::invalid_argument("knn: k must be ≥ 1");
      break;
    case Algorithm::fcnet:
      read("hidden", cfg.fcnet.hidden);
      read("epochs", cfg.fcnet.epochs);
      read("batch_size", cfg.fcnet.batch_size);
      read("learning_rate", cfg.fcnet.learning_rate);
      break;
    default:
      break;
  }
  return cfg;
}

// ---------------------------------------------------------------------------

Standardizer Standardizer::fit(const FeatureMatrix& x) {
  Standardizer s;
  const double n = static_cast<double>(x.rows());
  const double d = static_cast<double>(x.cols());
  s.mean = x.colwise().mean();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    const bool constant = !(sd > 1e-12 * std::max(1.0, std::abs(s.mean(j))));
    s.scale(j) = 1.0 / ((constant ? 1.0 : sd) * std::sqrt(d));
  }
  return s;
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& x) const {
  FeatureMatrix out = x;
  out.rowwise() -= mean;
  out.array().rowwise() *= scale.array();
  return out;
}

nlohmann::json Standardizer::to_json() const {
  return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
          {"scale", std::vector<double>(scale.data(), scale.data() + scale.size())}};
}

// ---------------------------------------------------------------------------

void Classifier::fit(const FeatureMatrix& x, const Labels& y, std::uint64_t seed) {
  if (x.rows() < 2) throw std::invalid_argument("fit: at least 2 samples required");
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw FeatureDimensionError("fit: " + std::to_string(x.rows()) + " rows but " +
                                std::to_string(y.size()) + " labels");
  }
  if (x.cols() == 0) throw FeatureDimensionError("fit: zero-length feature vectors");
  if (!x.allFinite()) throw std::invalid_argument("fit: features contain non-finite values");
  std::size_t positives = 0;
  for (int label : y) {
    if (label != 0 && label != 1) throw std::invalid_argument("fit: labels must be 0 (male) or 1 (female)");
    positives += static_cast<std::size_t>(label);
  }
  if (positives == 0 || positives == y.size()) {
    throw DegenerateLabelError("fit: training labels contain a single class");
  }
  warnings_.clear();
  feature_dim_ = static_cast<std::size_t>(x.cols());
  fit_impl(x, y, seed);
  fitted_ = true;
}

Labels Classifier::predict(const FeatureMatrix& x) const {
  if (!fitted_) throw std::logic_error("predict: classifier is not fitted");
  if (static_cast<std::size_t>(x.cols()) != feature_dim_) {
    throw FeatureDimensionError("predict: expected feature length " + std::to_string(feature_dim_) +
                                ", got " + std::to_string(x.cols()));
  }
  return predict_impl(x);
}

nlohmann::json Classifier::to_json() const {
  return {{"algorithm", std::string(to_string(algorithm()))},
          {"feature_dim", feature_dim_},
          {"classes", {"male", "female"}},
          {"warnings", warnings_},
          {"params", params_json()}};
}

std::unique_ptr<Classifier> make_classifier(const ClassifierConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::adaboost: return std::make_unique<BoostedTrees>(cfg.boost);
    case Algorithm::svm_linear: return std::make_unique<LinearSvm>(cfg.svm);
    case Algorithm::svm_rbf:
      return std::make_unique<KernelSvm>(cfg.algorithm,
                                         KernelSpec{KernelKind::rbf, cfg.svm.gamma, cfg.svm.degree, cfg.svm.coef0},
                                         cfg.svm);
    case Algorithm::svm_poly:
      return std::make_unique<KernelSvm>(cfg.algorithm,
                                         KernelSpec{KernelKind::poly, cfg.svm.gamma, cfg.svm.degree, cfg.svm.coef0},
                                         cfg.svm);
    case Algorithm::knn: return std::make_unique<KnnClassifier>(cfg.k);
    case Algorithm::c45:
    case Algorithm::id3: return std::make_unique<TreeClassifier>(cfg.algorithm);
    case Algorithm::fcnet: return std::make_unique<FcNetClassifier>(cfg.fcnet);
    case Algorithm::lda: return std::make_unique<LdaClassifier>();
  }
  throw std::invalid_argument("make_classifier: unknown algorithm");
}

std::unique_ptr<Classifier> fit_classifier(const FeatureMatrix& x, const Labels& y,
                                           const ClassifierConfig& cfg, std::uint64_t seed) {
  auto model = make_classifier(cfg);
  model->fit(x, y, seed);
  return model;
}

double accuracy(const Labels& truth, const Labels& predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (truth.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

}  // namespace rb
