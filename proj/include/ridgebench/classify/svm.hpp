#pragma once

#include <stdexcept>

#include "ridgebench/classify/classifier.hpp"

namespace rb {

enum class KernelKind { linear, rbf, poly };

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double gamma = 0.5;
  int degree = 3;
  double coef0 = 1.0;
};

/// linear: u·v; rbf: exp(−γ‖u−v‖²); poly: (γ·u·v + coef0)^degree.
double kernel(const Eigen::Ref<const Eigen::RowVectorXd>& u,
              const Eigen::Ref<const Eigen::RowVectorXd>& v, const KernelSpec& spec);

/// K(a_i, b_j) for all row pairs.
Eigen::MatrixXd gram_matrix(const FeatureMatrix& a, const FeatureMatrix& b, const KernelSpec& spec);

class ConvergenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SmoResult {
  Eigen::VectorXd alpha;
  double bias = 0.0;
  std::size_t iterations = 0;
  /// Final maximal KKT violation m(α) − M(α).
  double kkt_gap = 0.0;
};

/// Solves min ½αᵀQα − Σα, Q_ij = y_i y_j K_ij, s.t. 0 ≤ α ≤ C, yᵀα = 0,
/// with second-order working-set selection. `signs` holds ±1.
SmoResult smo_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& signs, double c,
                    double tolerance, std::size_t max_iterations = 0);

/// Dual objective ½αᵀQα − Σα.
double svm_dual_objective(const Eigen::MatrixXd& gram, const Eigen::VectorXd& signs,
                          const Eigen::VectorXd& alpha);

class KernelSvm final : public Classifier {
 public:
  KernelSvm(Algorithm algorithm, KernelSpec kernel, SvmParams params)
      : algorithm_(algorithm), kernel_(kernel), params_(params) {}
  Algorithm algorithm() const override { return algorithm_; }

  /// Σ α_i y_i K(x_i, x) + b on standardized input.
  Eigen::VectorXd decision_values(const FeatureMatrix& x) const;
  const SmoResult& solution() const { return solution_; }

 protected:
  void fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t seed) override;
  Labels predict_impl(const FeatureMatrix& x) const override;
  nlohmann::json params_json() const override;

 private:
  Algorithm algorithm_;
  KernelSpec kernel_;
  SvmParams params_;
  Standardizer standardizer_;
  FeatureMatrix support_;       // standardized support vectors
  Eigen::VectorXd coefficients_;  // α_i·y_i for each support vector
  SmoResult solution_;
};

/// Squared-hinge primal ½‖w‖² + C Σ max(0, 1 − y(w·x + b))², minimized by
/// accelerated gradient descent; the bias is not regularized.
class LinearSvm final : public Classifier {
 public:
  explicit LinearSvm(SvmParams params) : params_(params) {}
  Algorithm algorithm() const override { return Algorithm::svm_linear; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double bias() const { return bias_; }
  std::size_t iterations() const { return iterations_; }

 protected:
  void fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t seed) override;
  Labels predict_impl(const FeatureMatrix& x) const override;
  nlohmann::json params_json() const override;

 private:
  SvmParams params_;
  Standardizer standardizer_;
  Eigen::VectorXd weights_;
  double bias_ = 0.0;
  std::size_t iterations_ = 0;
};

}  // namespace rb
