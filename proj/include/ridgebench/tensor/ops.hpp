#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ridgebench/tensor/tensor.hpp"

namespace rb {

/// Square-kernel 2-D convolution geometry.
struct ConvSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_size = 3;
  std::size_t stride = 1;
  std::size_t dilation_rate = 1;
  std::size_t padding = 0;

  std::size_t effective_extent() const { return dilation_rate * (kernel_size - 1) + 1; }
  std::size_t output_size(std::size_t input) const;
  void validate() const;

  /// Padding that preserves spatial size at stride 1 (odd kernels only).
  static std::size_t same_padding(std::size_t kernel_size, std::size_t dilation_rate) {
    return dilation_rate * (kernel_size - 1) / 2;
  }
};

inline constexpr double kDefaultLeakySlope = 0.01;

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Σ a_i · coeffs_i with constant coefficients; a scalar.
Tensor weighted_sum(const Tensor& a, std::span<const double> coeffs);

Tensor leaky_relu(const Tensor& x, double negative_slope = kDefaultLeakySlope);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

/// input [N,C,H,W], weights [F,C,k,k], bias [F] (may be undefined).
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              const ConvSpec& spec);

enum class NormMode { train, eval };

/// Per-channel running statistics owned by a batch-norm layer.
struct RunningStats {
  Tensor mean;      // [C]
  Tensor variance;  // [C]
  double momentum = 0.9;
  double epsilon = 1e-5;

  static RunningStats make(std::size_t channels);
};

/// input [N,C,H,W]. Train mode normalizes with batch statistics and updates
/// `stats` (running = momentum·running + (1−momentum)·batch); eval mode uses
/// the running values.
Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  RunningStats& stats, NormMode mode);

/// x [N,D], weights [O,D], bias [O] → [N,O].
Tensor linear(const Tensor& x, const Tensor& weights, const Tensor& bias);

/// [N,C,H,W] → [N,C]
Tensor global_avg_pool(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
/// Nearest-neighbour upsampling by an integer factor on both spatial axes.
Tensor upsample_nearest(const Tensor& x, std::size_t factor);
/// Concatenates along axis 1 of two [N,·,H,W] tensors.
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// x [N,D] → x·diag(scale) + shift, constants broadcast over rows.
Tensor affine_columns(const Tensor& x, std::span<const double> scale,
                      std::span<const double> shift);
/// Row `row` of x [N,D] as a [1,D] tensor.
Tensor select_row(const Tensor& x, std::size_t row);

/// Mean of squared differences; target is treated as a constant.
Tensor mse_loss(const Tensor& prediction, const Tensor& target);
/// Mean softmax cross-entropy of logits [N,K] against class indices.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> classes);

}  // namespace rb
