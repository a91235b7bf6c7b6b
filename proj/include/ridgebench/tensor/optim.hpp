#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ridgebench/tensor/tensor.hpp"

namespace rb {

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamOptions {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::uint64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  AdamOptions options;

  static AdamState for_params(const std::vector<Tensor>& params, AdamOptions options = {});
};

/// One bias-corrected Adam update using the gradients stored on `params`.
/// Throws NumericError, leaving parameters and state untouched, when any
/// gradient entry is non-finite.
void adam_step(std::vector<Tensor>& params, AdamState& state);

/// Same update with explicit gradient arrays.
void adam_step(std::vector<Tensor>& params, const std::vector<std::vector<double>>& grads,
               AdamState& state);

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options = {});

  void zero_grad();
  void step() { adam_step(params_, state_); }
  const AdamState& state() const { return state_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

}  // namespace rb
