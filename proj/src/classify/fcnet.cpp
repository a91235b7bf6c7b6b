#include "ridgebench/classify/fcnet.hpp"

#include <algorithm>
#include <numeric>

#include "ridgebench/tensor/optim.hpp"

namespace rb {

namespace {

Tensor matrix_tensor(const FeatureMatrix& x) {
  return Tensor::from({static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(x.cols())},
                      std::vector<double>(x.data(), x.data() + x.size()));
}

}  // namespace

Tensor FcNetClassifier::logits(const Tensor& features) const {
  const Eigen::RowVectorXd shift = standardizer_.shift();
  Tensor h = affine_columns(features, std::span<const double>(standardizer_.scale.data(), standardizer_.scale.size()),
                            std::span<const double>(shift.data(), shift.size()));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](h);
    if (i + 1 < layers_.size()) h = leaky_relu(h);
  }
  return h;
}

Eigen::MatrixXd FcNetClassifier::scores(const FeatureMatrix& x) const {
  NoGradGuard guard;
  const Tensor out = logits(matrix_tensor(x));
  Eigen::MatrixXd s(x.rows(), 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    s(i, 0) = out.at(static_cast<std::size_t>(2 * i));
    s(i, 1) = out.at(static_cast<std::size_t>(2 * i + 1));
  }
  return s;
}

void FcNetClassifier::fit_impl(const FeatureMatrix& x, const Labels& y, std::uint64_t seed) {
  if (params_.batch_size == 0) throw std::invalid_argument("fcnet: batch_size must be ≥ 1");
  if (!(params_.learning_rate > 0.0)) throw std::invalid_argument("fcnet: learning_rate must be positive");
  standardizer_ = Standardizer::fit(x);
  const FeatureMatrix z = standardizer_.apply(x);

  Rng rng(seed);
  layers_.clear();
  std::size_t width = static_cast<std::size_t>(x.cols());
  for (auto h : params_.hidden) {
    layers_.push_back(Linear::make(width, h, rng));
    width = h;
  }
  layers_.push_back(Linear::make(width, 2, rng));
  std::vector<Tensor> params;
  for (const auto& l : layers_) {
    params.push_back(l.weight);
    params.push_back(l.bias);
  }
  Adam adam(params, AdamOptions{params_.learning_rate});

  const std::size_t n = y.size();
  const std::size_t d = static_cast<std::size_t>(z.cols());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  epoch_loss_.clear();
  for (std::size_t epoch = 0; epoch < params_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += params_.batch_size) {
      const std::size_t count = std::min(params_.batch_size, n - start);
      std::vector<double> batch(count * d);
      std::vector<int> classes(count);
      for (std::size_t b = 0; b < count; ++b) {
        const auto row = z.row(static_cast<Eigen::Index>(order[start + b]));
        std::copy(row.data(), row.data() + d, batch.begin() + static_cast<std::ptrdiff_t>(b * d));
        classes[b] = y[order[start + b]];
      }
      Tensor h = Tensor::from({count, d}, std::move(batch));
      for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = layers_[i](h);
        if (i + 1 < layers_.size()) h = leaky_relu(h);
      }
      const Tensor loss = softmax_cross_entropy(h, classes);
      adam.zero_grad();
      backward(loss);
      adam.step();
      total += loss.item() * static_cast<double>(count);
    }
    epoch_loss_.push_back(total / static_cast<double>(n));
  }
}

Labels FcNetClassifier::predict_impl(const FeatureMatrix& x) const {
  const Eigen::MatrixXd s = scores(x);
  Labels out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) out[static_cast<std::size_t>(i)] = s(i, 1) > s(i, 0) ? 1 : 0;
  return out;
}

nlohmann::json FcNetClassifier::params_json() const {
  auto layers = nlohmann::json::array();
  for (const auto& l : layers_) {
    layers.push_back({{"shape", {l.weight.dim(0), l.weight.dim(1)}},
                      {"weight", std::vector<double>(l.weight.data().begin(), l.weight.data().end())},
                      {"bias", std::vector<double>(l.bias.data().begin(), l.bias.data().end())}});
  }
  return {{"hidden", params_.hidden},
          {"activation", "leaky_relu"},
          {"epochs", params_.epochs},
          {"batch_size", params_.batch_size},
          {"learning_rate", params_.learning_rate},
          {"standardizer", standardizer_.to_json()},
          {"layers", layers},
          {"epoch_loss", epoch_loss_}};
}

}  // namespace rb
