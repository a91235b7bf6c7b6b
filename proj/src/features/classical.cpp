#include "ridgebench/features/classical.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <string>

namespace rb {

RealMatrix to_matrix(const GrayImage& image) {
  RealMatrix m(image.height(), image.width());
  std::copy(image.pixels().begin(), image.pixels().end(), m.data());
  return m;
}

// ---------------------------------------------------------------------------

HaarLevel dwt2_level(const RealMatrix& input, OddSizePolicy policy) {
  if (input.rows() == 0 || input.cols() == 0) throw FeatureError("dwt2_level: empty image");
  RealMatrix padded;
  const RealMatrix* src = &input;
  if (input.rows() % 2 != 0 || input.cols() % 2 != 0) {
    if (policy == OddSizePolicy::reject) {
      throw FeatureError("dwt2_level: odd dimensions " + std::to_string(input.rows()) + "x" +
                         std::to_string(input.cols()) + " (boundary policy: reject)");
    }
    const Eigen::Index r = input.rows() + input.rows() % 2;
    const Eigen::Index c = input.cols() + input.cols() % 2;
    padded.resize(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) padded(i, j) = input(i % input.rows(), j % input.cols());
    src = &padded;
  }
  const RealMatrix& m = *src;
  const Eigen::Index hr = m.rows() / 2, hc = m.cols() / 2;
  HaarLevel out{RealMatrix(hr, hc), RealMatrix(hr, hc), RealMatrix(hr, hc), RealMatrix(hr, hc)};
  for (Eigen::Index i = 0; i < hr; ++i) {
    for (Eigen::Index j = 0; j < hc; ++j) {
      const double a = m(2 * i, 2 * j), b = m(2 * i, 2 * j + 1);
      const double c = m(2 * i + 1, 2 * j), d = m(2 * i + 1, 2 * j + 1);
      out.ll(i, j) = 0.5 * (a + b + c + d);
      out.lh(i, j) = 0.5 * (a + b - c - d);
      out.hl(i, j) = 0.5 * (a - b + c - d);
      out.hh(i, j) = 0.5 * (a - b - c + d);
    }
  }
  return out;
}

std::size_t max_dwt_levels(std::size_t rows, std::size_t cols) {
  std::size_t levels = 0;
  while (rows >= 2 && cols >= 2 && rows % 2 == 0 && cols % 2 == 0) {
    rows /= 2;
    cols /= 2;
    ++levels;
  }
  return levels;
}

SubbandPyramid haar_pyramid(const RealMatrix& image, std::size_t levels) {
  const std::size_t feasible = max_dwt_levels(image.rows(), image.cols());
  if (levels == 0 || levels > feasible) {
    throw FeatureError("haar_pyramid: " + std::to_string(levels) + " levels requested for a " +
                       std::to_string(image.rows()) + "x" + std::to_string(image.cols()) +
                       " image; max feasible depth is " + std::to_string(feasible));
  }
  SubbandPyramid p;
  p.levels = levels;
  RealMatrix current = image;
  for (std::size_t k = 0; k < levels; ++k) {
    HaarLevel lvl = dwt2_level(current);
    p.bands.push_back(std::move(lvl.lh));
    p.bands.push_back(std::move(lvl.hl));
    p.bands.push_back(std::move(lvl.hh));
    current = std::move(lvl.ll);
  }
  p.bands.push_back(std::move(current));
  return p;
}

FeatureVector dwt_energy_features(const GrayImage& image, std::size_t levels) {
  const auto pyramid = haar_pyramid(to_matrix(image), levels);
  FeatureVector fv;
  fv.extractor = ExtractorId::dwt;
  fv.values.reserve(pyramid.bands.size());
  for (const auto& band : pyramid.bands) {
    fv.values.push_back(band.cwiseAbs().sum() / static_cast<double>(band.size()));
  }
  return fv;
}

// ---------------------------------------------------------------------------

SvdResult jacobi_svd(const Eigen::MatrixXd& a, const SvdOptions& options) {
  const bool transposed = a.rows() < a.cols();
  Eigen::MatrixXd w = transposed ? Eigen::MatrixXd(a.transpose()) : a;
  const Eigen::Index m = w.rows(), n = w.cols();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  // Columns this small are numerically zero; their direction is rounding
  // noise and chasing orthogonality with them never converges.
  const double negligible = std::pow(1e-15 * w.norm(), 2);

  SvdResult result;
  double off = 0.0;
  bool converged = n < 2;
  for (std::size_t sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    off = 0.0;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (alpha <= negligible || beta <= negligible) continue;
        const double cosine = std::abs(gamma) / std::sqrt(alpha * beta);
        off = std::max(off, cosine);
        if (cosine <= options.tolerance) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    result.sweeps = sweep + 1;
    converged = off <= options.tolerance;
  }
  if (!converged) {
    throw ConvergenceError("jacobi_svd: not converged after " + std::to_string(options.max_sweeps) +
                           " sweeps; residual column coherence " + std::to_string(off));
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms(j) = w.col(j).norm();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return norms(x) > norms(y); });

  Eigen::MatrixXd u(m, n);
  Eigen::MatrixXd vs(n, n);
  result.singular_values.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = order[k];
    result.singular_values(k) = norms(j);
    u.col(k) = norms(j) > 0.0 ? Eigen::VectorXd(w.col(j) / norms(j)) : Eigen::VectorXd::Zero(m);
    vs.col(k) = v.col(j);
  }
  if (transposed) {
    result.u = std::move(vs);
    result.v = std::move(u);
  } else {
    result.u = std::move(u);
    result.v = std::move(vs);
  }
  return result;
}

FeatureVector svd_features(const GrayImage& image, const SvdOptions& options) {
  if (image.empty()) throw FeatureError("svd_features: empty image");
  Eigen::MatrixXd a = to_matrix(image);
  const auto svd = jacobi_svd(a, options);
  FeatureVector fv;
  fv.extractor = ExtractorId::svd;
  fv.values.assign(svd.singular_values.data(),
                   svd.singular_values.data() + svd.singular_values.size());
  return fv;
}

// ---------------------------------------------------------------------------

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

using Complex = std::complex<double>;

// In-place iterative radix-2 decimation-in-time FFT over a strided sequence.
void fft_inplace(Complex* data, std::size_t n, std::size_t stride) {
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i * stride], data[j * stride]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const Complex twiddle = std::polar(1.0, angle * static_cast<double>(k));
        Complex& even = data[(start + k) * stride];
        Complex& odd = data[(start + k + len / 2) * stride];
        const Complex t = twiddle * odd;
        odd = even - t;
        even += t;
      }
    }
  }
}

}  // namespace

std::vector<double> fft2_orthonormal(const RealMatrix& image) {
  const std::size_t rows = image.rows(), cols = image.cols();
  if (!is_power_of_two(rows) || !is_power_of_two(cols)) {
    throw FeatureError("fft: dimensions " + std::to_string(rows) + "x" + std::to_string(cols) +
                       " are not powers of two; resize upstream");
  }
  std::vector<Complex> buf(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) buf[i * cols + j] = image(i, j);
  for (std::size_t i = 0; i < rows; ++i) fft_inplace(buf.data() + i * cols, cols, 1);
  for (std::size_t j = 0; j < cols; ++j) fft_inplace(buf.data() + j, rows, cols);
  const double norm = 1.0 / std::sqrt(static_cast<double>(rows * cols));
  std::vector<double> out(2 * rows * cols);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    out[2 * i] = buf[i].real() * norm;
    out[2 * i + 1] = buf[i].imag() * norm;
  }
  return out;
}

FeatureVector fft_features(const GrayImage& image, SpectrumMode mode) {
  const auto spectrum = fft2_orthonormal(to_matrix(image));
  FeatureVector fv;
  fv.extractor = ExtractorId::fft;
  fv.values.resize(spectrum.size() / 2);
  for (std::size_t i = 0; i < fv.values.size(); ++i) {
    const double mag = std::hypot(spectrum[2 * i], spectrum[2 * i + 1]);
    fv.values[i] = mode == SpectrumMode::magnitude ? mag : std::log1p(mag);
  }
  return fv;
}

}  // namespace rb
