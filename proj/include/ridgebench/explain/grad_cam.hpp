#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ridgebench/classify/classifier.hpp"
#include "ridgebench/data/gray_image.hpp"
#include "ridgebench/models/autoencoder.hpp"

namespace rb {

/// Raised when Grad-CAM is asked to differentiate a classifier that has no gradient.
class UnsupportedHeadError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Heatmap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  /// rows×cols, in [0,1]; the maximum is 1 unless the map is identically zero.
  std::vector<double> values;
  /// Bilinear upsampling of `values` to the output size.
  GrayImage upsampled;
  std::string target_layer;
  int target_class = 0;
  /// Largest value before normalization.
  double raw_max = 0.0;
  /// Per-channel weights: spatial mean of the score gradient.
  std::vector<double> channel_weights;
};

/// Builds the map from an activation [1,C,H,W] whose gradient with respect to
/// the class score has already been back-propagated:
/// ReLU(Σ_c mean(∂score/∂A_c)·A_c), divided by its maximum, upsampled to
/// output_size × output_size.
Heatmap cam_from_activation(const Tensor& activation, std::size_t output_size,
                            std::string target_layer = "", int target_class = 0);

struct GradCamOptions {
  int target_class = 0;
  /// Encoder block index; defaults to the last block.
  std::optional<std::size_t> block;
  std::size_t output_size = 256;
};

/// Grad-CAM over encoder → fcnet. The image must match the encoder's input size.
Heatmap grad_cam(Encoder& encoder, const Classifier& head, const GrayImage& image,
                 const GradCamOptions& options);

struct QuadrantMass {
  double top_left = 0.0;
  double top_right = 0.0;
  double bottom_left = 0.0;
  double bottom_right = 0.0;

  std::array<double, 4> as_array() const { return {top_left, top_right, bottom_left, bottom_right}; }
};

enum class Quadrant { top_left, top_right, bottom_left, bottom_right };

/// Share of the total mass in each quadrant (all zero for an all-zero map).
QuadrantMass quadrant_mass(const GrayImage& map);

/// Jet colormap: blue at 0 through cyan, yellow to dark red at 1.
std::array<double, 3> jet(double v);

/// Per-pixel blend (1 − w)·gray + w·color.
std::array<double, 3> blend(double gray, const std::array<double, 3>& color, double w);

/// 8-bit RGB: each pixel blends jet(h) over the gray image with weight alpha·h,
/// so a zero heatmap reproduces the image and h = 1 gives alpha over jet(1).
std::vector<std::uint8_t> overlay(const GrayImage& heatmap, const GrayImage& image, double alpha = 0.4);

/// Keeps `keep` and fills the other three quadrants with `fill`.
GrayImage confine_to_quadrant(const GrayImage& image, Quadrant keep, double fill = 1.0);

/// Copies the central half-size window of `source` (ridges throughout) into
/// quadrant `keep` of a same-size image that is `fill` everywhere else.
GrayImage ridge_quadrant_fixture(const GrayImage& source, Quadrant keep, double fill = 1.0);

nlohmann::json heatmap_sidecar(const Heatmap& heatmap);

/// Writes <stem>_heatmap.png, <stem>_overlay.png and <stem>.json.
void write_explanation(const std::filesystem::path& dir, const std::string& stem,
                       const Heatmap& heatmap, const GrayImage& image, double alpha = 0.4);

}  // namespace rb
