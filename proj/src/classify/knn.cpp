#include "ridgebench/classify/knn.hpp"

#include <algorithm>
#include <numeric>

namespace rb {

void KnnClassifier::fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t) {
  if (k_ == 0) throw std::invalid_argument("knn: k must be ≥ 1");
  standardizer_ = Standardizer::fit(x);
  train_ = standardizer_.apply(x);
  train_norms_ = train_.rowwise().squaredNorm();
  labels_ = y;
}

std::vector<std::vector<std::size_t>> KnnClassifier::neighbors(const FeatureMatrix& queries) const {
  if (static_cast<std::size_t>(queries.cols()) != feature_dim()) {
    throw FeatureDimensionError("knn: query length differs from training features");
  }
  const FeatureMatrix z = standardizer_.apply(queries);
  const Eigen::Index n = train_.rows();
  const std::size_t k = std::min<std::size_t>(k_, static_cast<std::size_t>(n));
  const double max_norm = train_norms_.maxCoeff();
  std::vector<std::vector<std::size_t>> result(static_cast<std::size_t>(z.rows()));

  constexpr Eigen::Index kBlock = 256;
  std::vector<double> approx(static_cast<std::size_t>(n));
  std::vector<std::pair<double, std::size_t>> candidates;
  for (Eigen::Index start = 0; start < z.rows(); start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, z.rows() - start);
    // Screen with ‖q‖² + ‖t‖² − 2q·t, then rank the survivors by exact distance.
    const Eigen::MatrixXd cross = z.middleRows(start, rows) * train_.transpose();
    for (Eigen::Index q = 0; q < rows; ++q) {
      const auto query = z.row(start + q);
      const double qn = query.squaredNorm();
      for (Eigen::Index t = 0; t < n; ++t) {
        approx[static_cast<std::size_t>(t)] = qn + train_norms_(t) - 2.0 * cross(q, t);
      }
      std::vector<double> sorted = approx;
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
      const double cutoff = sorted[k - 1] + 1e-8 * (qn + max_norm) + 1e-300;
      candidates.clear();
      for (Eigen::Index t = 0; t < n; ++t) {
        if (approx[static_cast<std::size_t>(t)] > cutoff) continue;
        double exact = 0.0;
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
          const double diff = query(j) - train_(t, j);
          exact += diff * diff;
        }
        candidates.emplace_back(exact, static_cast<std::size_t>(t));
      }
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                        candidates.end());
      auto& out = result[static_cast<std::size_t>(start + q)];
      for (std::size_t i = 0; i < k; ++i) out.push_back(candidates[i].second);
    }
  }
  return result;
}

Labels KnnClassifier::predict_impl(const FeatureMatrix& x) const {
  const auto nn = neighbors(x);
  Labels out(nn.size());
  for (std::size_t i = 0; i < nn.size(); ++i) {
    std::size_t female = 0;
    for (auto t : nn[i]) female += static_cast<std::size_t>(labels_[t]);
    out[i] = 2 * female > nn[i].size() ? 1 : 0;
  }
  return out;
}

nlohmann::json KnnClassifier::params_json() const {
  auto prototypes = nlohmann::json::array();
  for (Eigen::Index i = 0; i < train_.rows(); ++i) {
    prototypes.push_back(std::vector<double>(train_.row(i).data(), train_.row(i).data() + train_.cols()));
  }
  return {{"k", k_},
          {"metric", "euclidean"},
          {"standardizer", standardizer_.to_json()},
          {"prototypes", prototypes},
          {"labels", labels_}};
}

}  // namespace rb
