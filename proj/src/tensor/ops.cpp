#include "ridgebench/tensor/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

namespace rb {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " +
                         std::to_string(rank) + ", got " + shape_string(t.shape()));
  }
}

template <class Fwd, class Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  const auto in = x.data();
  Buffer out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return Tensor::make_result(x.shape(), std::move(out), {x}, [deriv](detail::Node& self) {
    auto& src = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      src.grad[i] += self.grad[i] * deriv(src.data[i], self.data[i]);
    }
  });
}

}  // namespace

std::size_t ConvSpec::output_size(std::size_t input) const {
  const std::size_t padded = input + 2 * padding;
  const std::size_t extent = effective_extent();
  if (padded < extent) return 0;
  return (padded - extent) / stride + 1;
}

void ConvSpec::validate() const {
  if (kernel_size < 1) throw DimensionError("conv2d: kernel_size must be >= 1");
  if (stride < 1) throw DimensionError("conv2d: stride must be >= 1");
  if (dilation_rate < 1) throw DimensionError("conv2d: dilation_rate must be >= 1");
  if (in_channels < 1 || out_channels < 1) {
    throw DimensionError("conv2d: channel counts must be >= 1");
  }
}

RunningStats RunningStats::make(std::size_t channels) {
  RunningStats s;
  s.mean = Tensor::zeros({channels});
  s.variance = Tensor::full({channels}, 1.0);
  return s;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Buffer out(a.numel());
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] + db[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Buffer out(a.numel());
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] - db[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    auto& lhs = *self.inputs[0];
    auto& rhs = *self.inputs[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (lhs.requires_grad) lhs.grad[i] += self.grad[i];
      if (rhs.requires_grad) rhs.grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Buffer out(a.numel());
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] * db[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    auto& lhs = *self.inputs[0];
    auto& rhs = *self.inputs[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (lhs.requires_grad) lhs.grad[i] += self.grad[i] * rhs.data[i];
      if (rhs.requires_grad) rhs.grad[i] += self.grad[i] * lhs.data[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return Tensor::make_result({1}, {total}, {a}, [](detail::Node& self) {
    auto& src = *self.inputs[0];
    for (auto& g : src.grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor weighted_sum(const Tensor& a, std::span<const double> coeffs) {
  if (coeffs.size() != a.numel()) {
    throw DimensionError("weighted_sum: " + std::to_string(coeffs.size()) +
                         " coefficients for " + std::to_string(a.numel()) + " values");
  }
  double total = 0.0;
  const auto d = a.data();
  for (std::size_t i = 0; i < d.size(); ++i) total += d[i] * coeffs[i];
  Buffer c(coeffs.begin(), coeffs.end());
  return Tensor::make_result({1}, {total}, {a}, [c = std::move(c)](detail::Node& self) {
    auto& src = *self.inputs[0];
    for (std::size_t i = 0; i < c.size(); ++i) src.grad[i] += self.grad[0] * c[i];
  });
}

Tensor leaky_relu(const Tensor& x, double negative_slope) {
  return unary(
      x, [negative_slope](double v) { return v > 0.0 ? v : negative_slope * v; },
      [negative_slope](double v, double) { return v > 0.0 ? 1.0 : negative_slope; });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

namespace {

struct ConvGeometry {
  std::size_t n, c, h, w, f, k, ho, wo, stride, dilation, padding;
  std::size_t patch() const { return c * k * k; }
  std::size_t pixels() const { return ho * wo; }
};

// col is [C·k·k, Ho·Wo] row-major.
void im2col(const double* image, const ConvGeometry& g, double* col) {
  const std::size_t pixels = g.pixels();
  for (std::size_t c = 0; c < g.c; ++c) {
    const double* plane = image + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        double* row = col + ((c * g.k + ki) * g.k + kj) * pixels;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki * g.dilation) -
                          static_cast<long>(g.padding);
          double* dst = row + oh * g.wo;
          if (ih < 0 || ih >= static_cast<long>(g.h)) {
            std::fill(dst, dst + g.wo, 0.0);
            continue;
          }
          const double* src = plane + ih * g.w;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj * g.dilation) -
                            static_cast<long>(g.padding);
            dst[ow] = (iw < 0 || iw >= static_cast<long>(g.w)) ? 0.0 : src[iw];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvGeometry& g, double* image) {
  const std::size_t pixels = g.pixels();
  for (std::size_t c = 0; c < g.c; ++c) {
    double* plane = image + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        const double* row = col + ((c * g.k + ki) * g.k + kj) * pixels;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki * g.dilation) -
                          static_cast<long>(g.padding);
          if (ih < 0 || ih >= static_cast<long>(g.h)) continue;
          double* dst = plane + ih * g.w;
          const double* src = row + oh * g.wo;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj * g.dilation) -
                            static_cast<long>(g.padding);
            if (iw >= 0 && iw < static_cast<long>(g.w)) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              const ConvSpec& spec) {
  spec.validate();
  require_rank(input, 4, "conv2d", "input");
  require_rank(weights, 4, "conv2d", "weights");
  const auto& is = input.shape();
  const auto& ws = weights.shape();
  if (is[1] != spec.in_channels) {
    throw DimensionError("conv2d: input axis 1 (channels) is " + std::to_string(is[1]) +
                         ", spec expects " + std::to_string(spec.in_channels));
  }
  if (ws[0] != spec.out_channels || ws[1] != spec.in_channels ||
      ws[2] != spec.kernel_size || ws[3] != spec.kernel_size) {
    throw DimensionError("conv2d: weights shape " + shape_string(ws) +
                         " does not match spec [" + std::to_string(spec.out_channels) + "," +
                         std::to_string(spec.in_channels) + "," +
                         std::to_string(spec.kernel_size) + "," +
                         std::to_string(spec.kernel_size) + "]");
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != spec.out_channels)) {
    throw DimensionError("conv2d: bias shape " + shape_string(bias.shape()) +
                         " does not match out_channels " + std::to_string(spec.out_channels));
  }
  const std::size_t ho = spec.output_size(is[2]);
  const std::size_t wo = spec.output_size(is[3]);
  if (ho == 0) {
    throw DimensionError("conv2d: axis 2 (height " + std::to_string(is[2]) +
                         ") is smaller than the effective kernel extent " +
                         std::to_string(spec.effective_extent()));
  }
  if (wo == 0) {
    throw DimensionError("conv2d: axis 3 (width " + std::to_string(is[3]) +
                         ") is smaller than the effective kernel extent " +
                         std::to_string(spec.effective_extent()));
  }

  const ConvGeometry g{is[0],        is[1],       is[2],        is[3],
                       ws[0],        ws[2],       ho,           wo,
                       spec.stride,  spec.dilation_rate, spec.padding};
  Buffer out(g.n * g.f * g.pixels());
  Buffer col(g.patch() * g.pixels());
  ConstMapMatrix w(weights.data().data(), g.f, g.patch());
  const double* x = input.data().data();
  for (std::size_t n = 0; n < g.n; ++n) {
    im2col(x + n * g.c * g.h * g.w, g, col.data());
    MapMatrix y(out.data() + n * g.f * g.pixels(), g.f, g.pixels());
    y.noalias() = w * ConstMapMatrix(col.data(), g.patch(), g.pixels());
    if (has_bias) {
      const auto b = bias.data();
      for (std::size_t f = 0; f < g.f; ++f) y.row(f).array() += b[f];
    }
  }

  std::vector<Tensor> inputs{input, weights};
  if (has_bias) inputs.push_back(bias);
  return Tensor::make_result({g.n, g.f, ho, wo}, std::move(out), std::move(inputs),
                             [g, has_bias](detail::Node& self) {
    auto& xin = *self.inputs[0];
    auto& win = *self.inputs[1];
    Buffer col(g.patch() * g.pixels());
    ConstMapMatrix w(win.data.data(), g.f, g.patch());
    for (std::size_t n = 0; n < g.n; ++n) {
      ConstMapMatrix gy(self.grad.data() + n * g.f * g.pixels(), g.f, g.pixels());
      if (win.requires_grad) {
        im2col(xin.data.data() + n * g.c * g.h * g.w, g, col.data());
        MapMatrix gw(win.grad.data(), g.f, g.patch());
        gw.noalias() += gy * ConstMapMatrix(col.data(), g.patch(), g.pixels()).transpose();
      }
      if (xin.requires_grad) {
        MapMatrix gcol(col.data(), g.patch(), g.pixels());
        gcol.noalias() = w.transpose() * gy;
        col2im_add(col.data(), g, xin.grad.data() + n * g.c * g.h * g.w);
      }
      if (has_bias && self.inputs[2]->requires_grad) {
        auto& gb = self.inputs[2]->grad;
        for (std::size_t f = 0; f < g.f; ++f) gb[f] += gy.row(f).sum();
      }
    }
  });
}

Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  RunningStats& stats, NormMode mode) {
  require_rank(input, 4, "batch_norm", "input");
  const auto& s = input.shape();
  const std::size_t n = s[0], c = s[1], hw = s[2] * s[3];
  if (gamma.numel() != c || beta.numel() != c || stats.mean.numel() != c ||
      stats.variance.numel() != c) {
    throw DimensionError("batch_norm: parameters must have " + std::to_string(c) +
                         " channels (axis 1 of " + shape_string(s) + ")");
  }
  if (mode == NormMode::train && n < 2) {
    throw DimensionError("batch_norm: degenerate batch of size 1 in train mode");
  }
  const double count = static_cast<double>(n * hw);
  const auto x = input.data();
  const auto gm = gamma.data();
  const auto bt = beta.data();

  Buffer mu(c), invstd(c);
  if (mode == NormMode::train) {
    auto rmean = stats.mean.mutable_data();
    auto rvar = stats.variance.mutable_data();
    for (std::size_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* p = x.data() + (b * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) acc += p[i];
      }
      const double m = acc / count;
      double sq = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* p = x.data() + (b * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) sq += (p[i] - m) * (p[i] - m);
      }
      const double var = sq / count;
      mu[ch] = m;
      invstd[ch] = 1.0 / std::sqrt(var + stats.epsilon);
      rmean[ch] = stats.momentum * rmean[ch] + (1.0 - stats.momentum) * m;
      const double unbiased = count > 1.0 ? sq / (count - 1.0) : var;
      rvar[ch] = stats.momentum * rvar[ch] + (1.0 - stats.momentum) * unbiased;
    }
  } else {
    const auto rmean = stats.mean.data();
    const auto rvar = stats.variance.data();
    for (std::size_t ch = 0; ch < c; ++ch) {
      mu[ch] = rmean[ch];
      invstd[ch] = 1.0 / std::sqrt(rvar[ch] + stats.epsilon);
    }
  }

  Buffer xhat(x.size());
  Buffer out(x.size());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const double v = (x[base + i] - mu[ch]) * invstd[ch];
        xhat[base + i] = v;
        out[base + i] = gm[ch] * v + bt[ch];
      }
    }
  }

  const bool batch_stats = mode == NormMode::train;
  return Tensor::make_result(
      s, std::move(out), {input, gamma, beta},
      [n, c, hw, count, batch_stats, xhat = std::move(xhat),
       invstd = std::move(invstd)](detail::Node& self) {
        auto& xin = *self.inputs[0];
        auto& gin = *self.inputs[1];
        auto& bin = *self.inputs[2];
        for (std::size_t ch = 0; ch < c; ++ch) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::size_t b = 0; b < n; ++b) {
            const std::size_t base = (b * c + ch) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
              sum_dy += self.grad[base + i];
              sum_dy_xhat += self.grad[base + i] * xhat[base + i];
            }
          }
          if (gin.requires_grad) gin.grad[ch] += sum_dy_xhat;
          if (bin.requires_grad) bin.grad[ch] += sum_dy;
          if (!xin.requires_grad) continue;
          const double g = gin.data[ch];
          for (std::size_t b = 0; b < n; ++b) {
            const std::size_t base = (b * c + ch) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
              const double dy = self.grad[base + i];
              if (batch_stats) {
                xin.grad[base + i] += g * invstd[ch] / count *
                                      (count * dy - sum_dy - xhat[base + i] * sum_dy_xhat);
              } else {
                xin.grad[base + i] += g * invstd[ch] * dy;
              }
            }
          }
        }
      });
}

Tensor linear(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  require_rank(x, 2, "linear", "input");
  require_rank(weights, 2, "linear", "weights");
  const std::size_t n = x.dim(0), d = x.dim(1), o = weights.dim(0);
  if (weights.dim(1) != d) {
    throw DimensionError("linear: input axis 1 has " + std::to_string(d) +
                         " features, weights expect " + std::to_string(weights.dim(1)));
  }
  const bool has_bias = bias.defined();
  if (has_bias && bias.numel() != o) {
    throw DimensionError("linear: bias must have " + std::to_string(o) + " entries");
  }
  Buffer out(n * o);
  MapMatrix y(out.data(), n, o);
  ConstMapMatrix xm(x.data().data(), n, d);
  ConstMapMatrix wm(weights.data().data(), o, d);
  y.noalias() = xm * wm.transpose();
  if (has_bias) {
    Eigen::Map<const Eigen::RowVectorXd> b(bias.data().data(), o);
    y.rowwise() += b;
  }
  std::vector<Tensor> inputs{x, weights};
  if (has_bias) inputs.push_back(bias);
  return Tensor::make_result({n, o}, std::move(out), std::move(inputs),
                             [n, d, o, has_bias](detail::Node& self) {
    auto& xin = *self.inputs[0];
    auto& win = *self.inputs[1];
    ConstMapMatrix gy(self.grad.data(), n, o);
    if (xin.requires_grad) {
      MapMatrix gx(xin.grad.data(), n, d);
      gx.noalias() += gy * ConstMapMatrix(win.data.data(), o, d);
    }
    if (win.requires_grad) {
      MapMatrix gw(win.grad.data(), o, d);
      gw.noalias() += gy.transpose() * ConstMapMatrix(xin.data.data(), n, d);
    }
    if (has_bias && self.inputs[2]->requires_grad) {
      Eigen::Map<Eigen::RowVectorXd> gb(self.inputs[2]->grad.data(), o);
      gb += gy.colwise().sum();
    }
  });
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 4, "global_avg_pool", "input");
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Buffer out(n * c);
  const auto d = x.data();
  for (std::size_t i = 0; i < n * c; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < hw; ++j) acc += d[i * hw + j];
    out[i] = acc / static_cast<double>(hw);
  }
  return Tensor::make_result({n, c}, std::move(out), {x}, [hw](detail::Node& self) {
    auto& src = *self.inputs[0];
    const double inv = 1.0 / static_cast<double>(hw);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      for (std::size_t j = 0; j < hw; ++j) src.grad[i * hw + j] += self.grad[i] * inv;
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " +
                         shape_string(shape));
  }
  Buffer out(x.data().begin(), x.data().end());
  return Tensor::make_result(std::move(shape), std::move(out), {x}, [](detail::Node& self) {
    auto& src = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) src.grad[i] += self.grad[i];
  });
}

Tensor upsample_nearest(const Tensor& x, std::size_t factor) {
  require_rank(x, 4, "upsample_nearest", "input");
  if (factor < 1) throw DimensionError("upsample_nearest: factor must be >= 1");
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = h * factor, ow = w * factor;
  Buffer out(planes * oh * ow);
  const auto d = x.data();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        out[(p * oh + i) * ow + j] = d[(p * h + i / factor) * w + j / factor];
      }
    }
  }
  return Tensor::make_result({x.dim(0), x.dim(1), oh, ow}, std::move(out), {x},
                             [planes, h, w, factor](detail::Node& self) {
    auto& src = *self.inputs[0];
    const std::size_t oh = h * factor, ow = w * factor;
    for (std::size_t p = 0; p < planes; ++p) {
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          src.grad[(p * h + i / factor) * w + j / factor] += self.grad[(p * oh + i) * ow + j];
        }
      }
    }
  });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 4, "concat_channels", "lhs");
  require_rank(b, 4, "concat_channels", "rhs");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw DimensionError("concat_channels: " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ outside axis 1");
  }
  const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1), hw = a.dim(2) * a.dim(3);
  Buffer out(n * (ca + cb) * hw);
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(da.data() + i * ca * hw, ca * hw, out.data() + i * (ca + cb) * hw);
    std::copy_n(db.data() + i * cb * hw, cb * hw, out.data() + (i * (ca + cb) + ca) * hw);
  }
  return Tensor::make_result({n, ca + cb, a.dim(2), a.dim(3)}, std::move(out), {a, b},
                             [n, ca, cb, hw](detail::Node& self) {
    auto& lhs = *self.inputs[0];
    auto& rhs = *self.inputs[1];
    for (std::size_t i = 0; i < n; ++i) {
      const double* g = self.grad.data() + i * (ca + cb) * hw;
      if (lhs.requires_grad) {
        for (std::size_t j = 0; j < ca * hw; ++j) lhs.grad[i * ca * hw + j] += g[j];
      }
      if (rhs.requires_grad) {
        for (std::size_t j = 0; j < cb * hw; ++j) rhs.grad[i * cb * hw + j] += g[ca * hw + j];
      }
    }
  });
}

Tensor affine_columns(const Tensor& x, std::span<const double> scale_by,
                      std::span<const double> shift) {
  require_rank(x, 2, "affine_columns", "input");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (scale_by.size() != d || shift.size() != d) {
    throw DimensionError("affine_columns: expected " + std::to_string(d) + " coefficients");
  }
  Buffer out(n * d);
  const auto xd = x.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = xd[i * d + j] * scale_by[j] + shift[j];
  }
  Buffer s(scale_by.begin(), scale_by.end());
  return Tensor::make_result({n, d}, std::move(out), {x},
                             [n, d, s = std::move(s)](detail::Node& self) {
    auto& src = *self.inputs[0];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) src.grad[i * d + j] += self.grad[i * d + j] * s[j];
    }
  });
}

Tensor select_row(const Tensor& x, std::size_t row) {
  require_rank(x, 2, "select_row", "input");
  if (row >= x.dim(0)) {
    throw DimensionError("select_row: row " + std::to_string(row) + " out of range on axis 0");
  }
  const std::size_t d = x.dim(1);
  Buffer out(x.data().begin() + row * d, x.data().begin() + (row + 1) * d);
  return Tensor::make_result({1, d}, std::move(out), {x}, [row, d](detail::Node& self) {
    auto& src = *self.inputs[0];
    for (std::size_t j = 0; j < d; ++j) src.grad[row * d + j] += self.grad[j];
  });
}

Tensor mse_loss(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction, target, "mse_loss");
  const auto p = prediction.data();
  const auto t = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += (p[i] - t[i]) * (p[i] - t[i]);
  const double n = static_cast<double>(p.size());
  Buffer tgt(t.begin(), t.end());
  return Tensor::make_result({1}, {acc / n}, {prediction},
                             [n, tgt = std::move(tgt)](detail::Node& self) {
    auto& src = *self.inputs[0];
    const double g = self.grad[0] * 2.0 / n;
    for (std::size_t i = 0; i < tgt.size(); ++i) src.grad[i] += g * (src.data[i] - tgt[i]);
  });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> classes) {
  require_rank(logits, 2, "softmax_cross_entropy", "logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (classes.size() != n) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(classes.size()) +
                         " labels for " + std::to_string(n) + " rows");
  }
  const auto z = logits.data();
  Buffer probs(n * k);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = classes[i];
    if (cls < 0 || static_cast<std::size_t>(cls) >= k) {
      throw DimensionError("softmax_cross_entropy: class index out of range");
    }
    const double* row = z.data() + i * k;
    const double mx = *std::max_element(row, row + k);
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) denom += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < k; ++j) probs[i * k + j] = std::exp(row[j] - mx) / denom;
    loss += -(row[cls] - mx - std::log(denom));
  }
  std::vector<int> cls(classes.begin(), classes.end());
  return Tensor::make_result({1}, {loss / static_cast<double>(n)}, {logits},
                             [n, k, probs = std::move(probs), cls = std::move(cls)](
                                 detail::Node& self) {
    auto& src = *self.inputs[0];
    const double g = self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const double onehot = static_cast<int>(j) == cls[i] ? 1.0 : 0.0;
        src.grad[i * k + j] += g * (probs[i * k + j] - onehot);
      }
    }
  });
}

}  // namespace rb
