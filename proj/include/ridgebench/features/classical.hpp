#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ridgebench/data/gray_image.hpp"
#include "ridgebench/features/feature_vector.hpp"

namespace rb {

using RealMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class FeatureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

RealMatrix to_matrix(const GrayImage& image);

// ---------------------------------------------------------------------------
// Haar wavelet
// ---------------------------------------------------------------------------

/// What dwt2_level does with an odd dimension.
enum class OddSizePolicy {
  reject,
  /// Append the wrapped-around first row/column (periodic extension).
  periodic_pad,
};

/// One level of the orthonormal 2-D Haar transform. For each 2×2 block
/// [[a,b],[c,d]]:
///   LL = (a+b+c+d)/2   LH = (a+b−c−d)/2   HL = (a−b+c−d)/2   HH = (a−b−c+d)/2
/// LH is low-pass along rows and high-pass down columns.
struct HaarLevel {
  RealMatrix ll, lh, hl, hh;
};

HaarLevel dwt2_level(const RealMatrix& image, OddSizePolicy policy = OddSizePolicy::reject);

/// Sub-bands of a k-level decomposition ordered LH₁,HL₁,HH₁, …, LHₖ,HLₖ,HHₖ, LLₖ.
struct SubbandPyramid {
  std::size_t levels = 0;
  std::vector<RealMatrix> bands;
};

/// Deepest decomposition supported without odd intermediate sizes.
std::size_t max_dwt_levels(std::size_t rows, std::size_t cols);
SubbandPyramid haar_pyramid(const RealMatrix& image, std::size_t levels);

/// Mean absolute coefficient of every sub-band, (1/(W·H))·Σ|X(i,j)|, in
/// pyramid order. This is the "energy" used as the wavelet feature; note it
/// is an L1 mean, not the squared-coefficient energy.
FeatureVector dwt_energy_features(const GrayImage& image, std::size_t levels = 8);

// ---------------------------------------------------------------------------
// Singular values
// ---------------------------------------------------------------------------

struct SvdOptions {
  std::size_t max_sweeps = 100;
  double tolerance = 1e-12;  // on the largest normalized column inner product
};

struct SvdResult {
  Eigen::VectorXd singular_values;  // non-increasing, length min(rows, cols)
  Eigen::MatrixXd u;                // rows × min(rows, cols)
  Eigen::MatrixXd v;                // cols × min(rows, cols)
  std::size_t sweeps = 0;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One-sided (Hestenes) Jacobi SVD.
SvdResult jacobi_svd(const Eigen::MatrixXd& a, const SvdOptions& options = {});

/// Singular values of the image, unnormalized, non-increasing.
FeatureVector svd_features(const GrayImage& image, const SvdOptions& options = {});

// ---------------------------------------------------------------------------
// Fourier
// ---------------------------------------------------------------------------

enum class SpectrumMode { magnitude, log_magnitude };

bool is_power_of_two(std::size_t n);

/// Orthonormal 2-D DFT, F[k,l] = (1/√(MN)) ΣΣ f[m,n] e^{−j2π(mk/M + nl/N)},
/// returned row-major as interleaved (re, im) pairs.
std::vector<double> fft2_orthonormal(const RealMatrix& image);

/// |F[k,l]| flattened row-major (length M·N); log_magnitude applies log1p.
FeatureVector fft_features(const GrayImage& image,
                           SpectrumMode mode = SpectrumMode::magnitude);

}  // namespace rb
