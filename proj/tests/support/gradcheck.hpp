#pragma once

// Central finite-difference gradient checking shared by the unit and
// acceptance suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "ridgebench/tensor/tensor.hpp"

namespace rb::testing {

inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Probes whose stencil straddles a kink (leaky-relu at 0): the one-sided
  // slopes disagree, so no derivative exists there to compare against.
  std::size_t kinks = 0;
};

/// Compares autodiff gradients of `loss_fn` w.r.t. `wrt` with central
/// differences. `indices` selects which entries to probe (all when empty).
inline GradCheck check_gradient(const std::function<Tensor()>& loss_fn, Tensor wrt,
                                std::vector<std::size_t> indices = {}, double step = 1e-5) {
  wrt.zero_grad();
  Tensor loss = loss_fn();
  backward(loss);
  const std::vector<double> analytic(wrt.grad().begin(), wrt.grad().end());
  if (indices.empty()) {
    indices.resize(wrt.numel());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  }
  GradCheck out;
  auto values = wrt.mutable_data();
  for (auto i : indices) {
    const double saved = values[i];
    double plus = 0.0, minus = 0.0, centre = 0.0;
    {
      NoGradGuard guard;
      values[i] = saved + step;
      plus = loss_fn().item();
      values[i] = saved - step;
      minus = loss_fn().item();
      values[i] = saved;
      centre = loss_fn().item();
    }
    const double right = (plus - centre) / step;
    const double left = (centre - minus) / step;
    if (std::abs(right - left) > 1e-2 * std::max({1.0, std::abs(right), std::abs(left)})) {
      ++out.kinks;
      continue;
    }
    const double numeric = (plus - minus) / (2.0 * step);
    out.max_rel_error = std::max(out.max_rel_error, relative_error(analytic[i], numeric));
    ++out.checked;
  }
  return out;
}

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, bool requires_grad = true) {
  auto n = shape_numel(shape);
  return Tensor::from(std::move(shape), random_values(n, rng), requires_grad);
}

/// Random indices sampled without replacement (sorted), or all when n <= count.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count,
                                               std::mt19937_64& rng) {
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  if (n <= count) return all;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace rb::testing
