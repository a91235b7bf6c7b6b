#include "ridgebench/classify/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rb {

double kernel(const Eigen::Ref<const Eigen::RowVectorXd>& u,
              const Eigen::Ref<const Eigen::RowVectorXd>& v, const KernelSpec& spec) {
  if (u.size() != v.size()) throw FeatureDimensionError("kernel: vectors differ in length");
  switch (spec.kind) {
    case KernelKind::linear: return u.dot(v);
    case KernelKind::rbf: return std::exp(-spec.gamma * (u - v).squaredNorm());
    case KernelKind::poly: return std::pow(spec.gamma * u.dot(v) + spec.coef0, spec.degree);
  }
  return 0.0;
}

Eigen::MatrixXd gram_matrix(const FeatureMatrix& a, const FeatureMatrix& b, const KernelSpec& spec) {
  if (a.cols() != b.cols()) throw FeatureDimensionError("gram_matrix: column counts differ");
  Eigen::MatrixXd dots = a * b.transpose();
  switch (spec.kind) {
    case KernelKind::linear: return dots;
    case KernelKind::rbf: {
      const Eigen::VectorXd an = a.rowwise().squaredNorm();
      const Eigen::VectorXd bn = b.rowwise().squaredNorm();
      for (Eigen::Index i = 0; i < dots.rows(); ++i) {
        for (Eigen::Index j = 0; j < dots.cols(); ++j) {
          const double d2 = std::max(0.0, an(i) + bn(j) - 2.0 * dots(i, j));
          dots(i, j) = std::exp(-spec.gamma * d2);
        }
      }
      return dots;
    }
    case KernelKind::poly:
      return dots.unaryExpr(
          [&](double d) { return std::pow(spec.gamma * d + spec.coef0, spec.degree); });
  }
  return dots;
}

double svm_dual_objective(const Eigen::MatrixXd& gram, const Eigen::VectorXd& signs,
                          const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd ya = signs.cwiseProduct(alpha);
  return 0.5 * ya.dot(gram * ya) - alpha.sum();
}

SmoResult smo_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& signs, double c,
                    double tolerance, std::size_t max_iterations) {
  const Eigen::Index n = gram.rows();
  if (gram.cols() != n || signs.size() != n) {
    throw FeatureDimensionError("smo_solve: gram must be n×n with n labels");
  }
  if (!(c > 0.0)) throw std::invalid_argument("smo_solve: C must be positive");
  if (max_iterations == 0) max_iterations = std::max<std::size_t>(1'000'000, 100 * n);
  constexpr double kTau = 1e-12;

  SmoResult r;
  r.alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // Qα − e
  auto& alpha = r.alpha;
  const auto& y = signs;
  auto in_up = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) < c) || (y(t) < 0 && alpha(t) > 0); };
  auto in_low = [&](Eigen::Index t) { return (y(t) < 0 && alpha(t) < c) || (y(t) > 0 && alpha(t) > 0); };

  for (;;) {
    double m = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (in_up(t) && -y(t) * grad(t) > m) {
        m = -y(t) * grad(t);
        i = t;
      }
    }
    double big_m = std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y(t) * grad(t);
      big_m = std::min(big_m, v);
      if (i >= 0 && v < m) {
        const double b = m - v;
        double a = gram(i, i) + gram(t, t) - 2.0 * gram(i, t);
        if (a <= 0.0) a = kTau;
        const double obj = -(b * b) / a;
        if (obj < best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    r.kkt_gap = (i < 0 || std::isinf(big_m)) ? 0.0 : m - big_m;
    if (i < 0 || j < 0 || r.kkt_gap < tolerance) break;
    if (r.iterations >= max_iterations) {
      throw ConvergenceFailure("smo_solve: no convergence after " + std::to_string(max_iterations) +
                               " iterations; KKT gap " + std::to_string(r.kkt_gap) +
                               " > tolerance " + std::to_string(tolerance));
    }
    ++r.iterations;

    const double old_i = alpha(i), old_j = alpha(j);
    const double qij = y(i) * y(j) * gram(i, j);
    if (y(i) != y(j)) {
      double quad = gram(i, i) + gram(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) {
          alpha(j) = 0.0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = -diff;
      }
      if (diff > 0.0) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = c - diff;
        }
      } else if (alpha(j) > c) {
        alpha(j) = c;
        alpha(i) = c + diff;
      }
    } else {
      double quad = gram(i, i) + gram(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double total = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (total > c) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = total - c;
        }
      } else if (alpha(j) < 0.0) {
        alpha(j) = 0.0;
        alpha(i) = total;
      }
      if (total > c) {
        if (alpha(j) > c) {
          alpha(j) = c;
          alpha(i) = total - c;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = total;
      }
    }
    const double di = alpha(i) - old_i, dj = alpha(j) - old_j;
    for (Eigen::Index t = 0; t < n; ++t) {
      grad(t) += y(t) * (y(i) * gram(t, i) * di + y(j) * gram(t, j) * dj);
    }
  }

  // Bias from free vectors; bounded ones bracket it otherwise.
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * grad(t);
    if (alpha(t) >= c) {
      if (y(t) < 0) upper = std::min(upper, yg); else lower = std::max(lower, yg);
    } else if (alpha(t) <= 0.0) {
      if (y(t) > 0) upper = std::min(upper, yg); else lower = std::max(lower, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count)
                                    : 0.5 * (upper + lower);
  r.bias = -rho;
  return r;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd to_signs(const Labels& y) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) s(static_cast<Eigen::Index>(i)) = y[i] == 1 ? 1.0 : -1.0;
  return s;
}

Labels sign_to_labels(const Eigen::VectorXd& decision) {
  Labels out(static_cast<std::size_t>(decision.size()));
  for (Eigen::Index i = 0; i < decision.size(); ++i) out[static_cast<std::size_t>(i)] = decision(i) > 0.0 ? 1 : 0;
  return out;
}

const char* kernel_name(KernelKind k) {
  switch (k) {
    case KernelKind::linear: return "linear";
    case KernelKind::rbf: return "rbf";
    case KernelKind::poly: return "poly";
  }
  return "unknown";
}

}  // namespace

void KernelSvm::fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t) {
  standardizer_ = Standardizer::fit(x);
  const FeatureMatrix z = standardizer_.apply(x);
  const Eigen::VectorXd signs = to_signs(y);
  solution_ = smo_solve(gram_matrix(z, z, kernel_), signs, params_.c, params_.tolerance);
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    if (solution_.alpha(i) > 0.0) sv.push_back(i);
  }
  support_.resize(static_cast<Eigen::Index>(sv.size()), z.cols());
  coefficients_.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    support_.row(static_cast<Eigen::Index>(k)) = z.row(sv[k]);
    coefficients_(static_cast<Eigen::Index>(k)) = solution_.alpha(sv[k]) * signs(sv[k]);
  }
}

Eigen::VectorXd KernelSvm::decision_values(const FeatureMatrix& x) const {
  const FeatureMatrix z = standardizer_.apply(x);
  if (support_.rows() == 0) return Eigen::VectorXd::Constant(z.rows(), solution_.bias);
  return (gram_matrix(z, support_, kernel_) * coefficients_).array() + solution_.bias;
}

Labels KernelSvm::predict_impl(const FeatureMatrix& x) const {
  return sign_to_labels(decision_values(x));
}

nlohmann::json KernelSvm::params_json() const {
  nlohmann::json j;
  j["kernel"] = kernel_name(kernel_.kind);
  j["gamma"] = kernel_.gamma;
  j["degree"] = kernel_.degree;
  j["coef0"] = kernel_.coef0;
  j["C"] = params_.c;
  j["bias"] = solution_.bias;
  j["iterations"] = solution_.iterations;
  j["standardizer"] = standardizer_.to_json();
  j["dual_coefficients"] = std::vector<double>(coefficients_.data(), coefficients_.data() + coefficients_.size());
  auto& sv = j["support_vectors"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < support_.rows(); ++i) {
    sv.push_back(std::vector<double>(support_.row(i).data(), support_.row(i).data() + support_.cols()));
  }
  return j;
}

// ---------------------------------------------------------------------------

void LinearSvm::fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t) {
  standardizer_ = Standardizer::fit(x);
  const FeatureMatrix z = standardizer_.apply(x);
  const Eigen::VectorXd s = to_signs(y);
  const Eigen::Index d = z.cols();
  const double c = params_.linear_c;

  // Lipschitz bound of the gradient: 1 + 2C·λmax([Z 1]ᵀ[Z 1]) by power iteration.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d + 1).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd zv = z * v.head(d) + Eigen::VectorXd::Constant(z.rows(), v(d));
    Eigen::VectorXd next(d + 1);
    next.head(d) = z.transpose() * zv;
    next(d) = zv.sum();
    lambda = next.norm();
    if (lambda == 0.0) break;
    v = next / lambda;
  }
  const double step = 1.0 / (1.0 + 2.0 * c * lambda * 1.01);

  auto gradient = [&](const Eigen::VectorXd& theta, double* objective) {
    const Eigen::VectorXd margin = s.cwiseProduct(((z * theta.head(d)).array() + theta(d)).matrix());
    const Eigen::VectorXd slack = (1.0 - margin.array()).max(0.0).matrix();
    if (objective) *objective = 0.5 * theta.head(d).squaredNorm() + c * slack.squaredNorm();
    const Eigen::VectorXd weighted = -2.0 * c * slack.cwiseProduct(s);
    Eigen::VectorXd g(d + 1);
    g.head(d) = theta.head(d) + z.transpose() * weighted;
    g(d) = weighted.sum();
    return g;
  };

  // FISTA with gradient-based restart.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd momentum_point = theta;
  double t = 1.0;
  const double g0 = gradient(theta, nullptr).norm();
  const std::size_t max_iterations = 5000;
  iterations_ = 0;
  for (; iterations_ < max_iterations; ++iterations_) {
    const Eigen::VectorXd g = gradient(momentum_point, nullptr);
    if (g.norm() <= 1e-6 * std::max(1.0, g0)) {
      theta = momentum_point;
      break;
    }
    const Eigen::VectorXd next = momentum_point - step * g;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (g.dot(next - theta) > 0.0) {
      momentum_point = next;
      t = 1.0;
    } else {
      momentum_point = next + ((t - 1.0) / t_next) * (next - theta);
      t = t_next;
    }
    theta = next;
  }
  if (iterations_ == max_iterations) {
    warn("linear svm: gradient tolerance not reached in " + std::to_string(max_iterations) +
         " iterations");
  }
  weights_ = theta.head(d);
  bias_ = theta(d);
}

Labels LinearSvm::predict_impl(const FeatureMatrix& x) const {
  const Eigen::VectorXd decision = (standardizer_.apply(x) * weights_).array() + bias_;
  return sign_to_labels(decision);
}

nlohmann::json LinearSvm::params_json() const {
  nlohmann::json j;
  j["C"] = params_.linear_c;
  j["loss"] = "squared_hinge";
  j["iterations"] = iterations_;
  j["bias"] = bias_;
  j["weights"] = std::vector<double>(weights_.data(), weights_.data() + weights_.size());
  j["standardizer"] = standardizer_.to_json();
  return j;
}

}  // namespace rb
