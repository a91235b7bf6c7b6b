#pragma once

// Direct-summation convolution used as an oracle for the im2col path.

#include <vector>

#include "ridgebench/tensor/ops.hpp"

namespace rb::testing {

inline std::vector<double> naive_conv2d(const Tensor& x, const Tensor& w,
                                        const std::vector<double>& bias, const ConvSpec& s) {
  const long n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const long f = w.dim(0), k = w.dim(2);
  const long ho = s.output_size(h), wo = s.output_size(wd);
  std::vector<double> out(n * f * ho * wo, 0.0);
  const auto xd = x.data();
  const auto wdat = w.data();
  for (long b = 0; b < n; ++b)
    for (long o = 0; o < f; ++o)
      for (long i = 0; i < ho; ++i)
        for (long j = 0; j < wo; ++j) {
          double acc = bias.empty() ? 0.0 : bias[o];
          for (long ch = 0; ch < c; ++ch)
            for (long a = 0; a < k; ++a)
              for (long bb = 0; bb < k; ++bb) {
                const long yi = i * long(s.stride) + a * long(s.dilation_rate) - long(s.padding);
                const long xj = j * long(s.stride) + bb * long(s.dilation_rate) - long(s.padding);
                if (yi < 0 || yi >= h || xj < 0 || xj >= wd) continue;
                acc += wdat[((o * c + ch) * k + a) * k + bb] * xd[((b * c + ch) * h + yi) * wd + xj];
              }
          out[((b * f + o) * ho + i) * wo + j] = acc;
        }
  return out;
}

/// Kernel with (rate−1) zeros inserted between taps: [F,C,k,k] → [F,C,K,K],
/// K = rate·(k−1)+1.
inline Tensor inflate_kernel(const Tensor& w, std::size_t rate) {
  const std::size_t f = w.dim(0), c = w.dim(1), k = w.dim(2);
  const std::size_t big = rate * (k - 1) + 1;
  std::vector<double> out(f * c * big * big, 0.0);
  const auto d = w.data();
  for (std::size_t o = 0; o < f; ++o)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b)
          out[((o * c + ch) * big + a * rate) * big + b * rate] = d[((o * c + ch) * k + a) * k + b];
  return Tensor::from({f, c, big, big}, std::move(out));
}

}  // namespace rb::testing
