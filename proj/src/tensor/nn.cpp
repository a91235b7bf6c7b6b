#include "ridgebench/tensor/nn.hpp"

#include <algorithm>
#include <cmath>

namespace rb {

void ParameterList::add(std::string name, Tensor tensor, bool trainable) {
  entries_.push_back({std::move(name), std::move(tensor), trainable});
}

std::vector<Tensor> ParameterList::trainable() const {
  std::vector<Tensor> out;
  for (const auto& e : entries_) {
    if (e.trainable) out.push_back(e.tensor);
  }
  return out;
}

std::size_t ParameterList::trainable_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [](const Entry& e) { return e.trainable; }));
}

Tensor he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) v = dist(rng);
  return Tensor::from(std::move(shape), std::move(values), true);
}

Conv2d Conv2d::make(const ConvSpec& spec, Rng& rng, bool with_bias) {
  spec.validate();
  Conv2d c;
  c.spec = spec;
  const std::size_t fan_in = spec.in_channels * spec.kernel_size * spec.kernel_size;
  c.weight = he_uniform({spec.out_channels, spec.in_channels, spec.kernel_size, spec.kernel_size},
                        fan_in, rng);
  if (with_bias) c.bias = Tensor::zeros({spec.out_channels}, true);
  return c;
}

void Conv2d::collect(const std::string& prefix, ParameterList& out) const {
  out.add(prefix + ".weight", weight);
  if (bias.defined()) out.add(prefix + ".bias", bias);
}

BatchNorm2d BatchNorm2d::make(std::size_t channels) {
  BatchNorm2d bn;
  bn.gamma = Tensor::full({channels}, 1.0, true);
  bn.beta = Tensor::zeros({channels}, true);
  bn.stats = RunningStats::make(channels);
  return bn;
}

void BatchNorm2d::collect(const std::string& prefix, ParameterList& out) const {
  out.add(prefix + ".gamma", gamma);
  out.add(prefix + ".beta", beta);
  out.add(prefix + ".running_mean", stats.mean, false);
  out.add(prefix + ".running_var", stats.variance, false);
}

Linear Linear::make(std::size_t in_features, std::size_t out_features, Rng& rng) {
  Linear l;
  l.weight = he_uniform({out_features, in_features}, in_features, rng);
  l.bias = Tensor::zeros({out_features}, true);
  return l;
}

void Linear::collect(const std::string& prefix, ParameterList& out) const {
  out.add(prefix + ".weight", weight);
  out.add(prefix + ".bias", bias);
}

}  // namespace rb
