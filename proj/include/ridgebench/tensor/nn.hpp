#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ridgebench/tensor/ops.hpp"
#include "ridgebench/tensor/tensor.hpp"

namespace rb {

using Rng = std::mt19937_64;

/// Named parameters and buffers of a network, in registration order.
class ParameterList {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    bool trainable;
  };

  void add(std::string name, Tensor tensor, bool trainable = true);
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Tensor> trainable() const;
  std::size_t trainable_count() const;

 private:
  std::vector<Entry> entries_;
};

/// Uniform(−√(6/fan_in), √(6/fan_in)).
Tensor he_uniform(Shape shape, std::size_t fan_in, Rng& rng);

struct Conv2d {
  ConvSpec spec;
  Tensor weight;  // [F,C,k,k]
  Tensor bias;    // [F], undefined for bias-free convs

  /// Drop the bias when batch norm follows: its mean subtraction cancels it.
  static Conv2d make(const ConvSpec& spec, Rng& rng, bool with_bias = true);
  Tensor operator()(const Tensor& x) const { return conv2d(x, weight, bias, spec); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

struct BatchNorm2d {
  Tensor gamma;
  Tensor beta;
  RunningStats stats;

  static BatchNorm2d make(std::size_t channels);
  Tensor operator()(const Tensor& x, NormMode mode) {
    return batch_norm(x, gamma, beta, stats, mode);
  }
  void collect(const std::string& prefix, ParameterList& out) const;
};

struct Linear {
  Tensor weight;  // [O,D]
  Tensor bias;    // [O]

  static Linear make(std::size_t in_features, std::size_t out_features, Rng& rng);
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

}  // namespace rb
