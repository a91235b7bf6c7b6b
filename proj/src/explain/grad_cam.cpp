#include "ridgebench/explain/grad_cam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ridgebench/classify/fcnet.hpp"
#include "ridgebench/data/image_io.hpp"

namespace rb {

Heatmap cam_from_activation(const Tensor& activation, std::size_t output_size,
                            std::string target_layer, int target_class) {
  if (activation.rank() != 4 || activation.dim(0) != 1) {
    throw DimensionError("grad_cam: activation must be [1,C,H,W], got " + shape_string(activation.shape()));
  }
  if (!activation.has_grad()) {
    throw ContractError("grad_cam: activation has no gradient; run backward on the class score first");
  }
  const std::size_t c = activation.dim(1), h = activation.dim(2), w = activation.dim(3);
  const std::size_t plane = h * w;
  const auto a = activation.data();
  const auto g = activation.grad();

  Heatmap map;
  map.rows = h;
  map.cols = w;
  map.target_layer = std::move(target_layer);
  map.target_class = target_class;
  map.channel_weights.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    double total = 0.0;
    for (std::size_t i = 0; i < plane; ++i) total += g[k * plane + i];
    map.channel_weights[k] = total / static_cast<double>(plane);
  }
  map.values.assign(plane, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < plane; ++i) map.values[i] += map.channel_weights[k] * a[k * plane + i];
  }
  for (auto& v : map.values) v = std::max(0.0, v);
  map.raw_max = *std::max_element(map.values.begin(), map.values.end());
  if (map.raw_max > 0.0) {
    for (auto& v : map.values) v /= map.raw_max;
  }
  map.upsampled = resize_bilinear(GrayImage(w, h, map.values), output_size, output_size);
  return map;
}

Heatmap grad_cam(Encoder& encoder, const Classifier& head, const GrayImage& image,
                 const GradCamOptions& options) {
  const auto* net = dynamic_cast<const FcNetClassifier*>(&head);
  if (!net) {
    throw UnsupportedHeadError("grad_cam needs a differentiable classifier head; " +
                               std::string(to_string(head.algorithm())) +
                               " has no gradient, use fcnet");
  }
  if (options.target_class != 0 && options.target_class != 1) {
    throw std::invalid_argument("grad_cam: target class must be 0 (male) or 1 (female)");
  }
  const std::size_t blocks = encoder.arch().blocks.size();
  const std::size_t block = options.block.value_or(blocks - 1);
  if (block >= blocks) {
    throw std::invalid_argument("grad_cam: block " + std::to_string(block) + " out of range (encoder has " +
                                std::to_string(blocks) + ")");
  }
  std::vector<Tensor> activations;
  const GrayImage* images[] = {&image};
  const Tensor features = encoder(images_to_tensor(std::span<const GrayImage* const>(images)),
                                  NormMode::eval, &activations);
  const Tensor logits = net->logits(features);
  std::vector<double> contrast(2, -1.0);
  contrast[static_cast<std::size_t>(options.target_class)] = 1.0;
  const Tensor score = sum(mul(logits, Tensor::from({1, 2}, std::move(contrast))));
  backward(score);
  return cam_from_activation(activations[block], options.output_size,
                             "encoder.block" + std::to_string(block), options.target_class);
}

QuadrantMass quadrant_mass(const GrayImage& map) {
  const std::size_t hr = map.height() / 2, hc = map.width() / 2;
  double q[4] = {0, 0, 0, 0};
  for (std::size_t r = 0; r < map.height(); ++r) {
    for (std::size_t c = 0; c < map.width(); ++c) {
      q[(r < hr ? 0 : 2) + (c < hc ? 0 : 1)] += map(r, c);
    }
  }
  const double total = q[0] + q[1] + q[2] + q[3];
  if (total <= 0.0) return {};
  return {q[0] / total, q[1] / total, q[2] / total, q[3] / total};
}

std::array<double, 3> jet(double v) {
  v = std::clamp(v, 0.0, 1.0);
  auto channel = [&](double centre) { return std::clamp(1.5 - std::abs(4.0 * v - centre), 0.0, 1.0); };
  return {channel(3.0), channel(2.0), channel(1.0)};
}

std::array<double, 3> blend(double gray, const std::array<double, 3>& color, double w) {
  return {(1.0 - w) * gray + w * color[0], (1.0 - w) * gray + w * color[1], (1.0 - w) * gray + w * color[2]};
}

std::vector<std::uint8_t> overlay(const GrayImage& heatmap, const GrayImage& image, double alpha) {
  if (heatmap.width() != image.width() || heatmap.height() != image.height()) {
    throw DimensionError("overlay: heatmap and image sizes differ");
  }
  std::vector<std::uint8_t> rgb(3 * image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double h = std::clamp(heatmap.pixels()[i], 0.0, 1.0);
    const auto px = blend(std::clamp(image.pixels()[i], 0.0, 1.0), jet(h), alpha * h);
    for (std::size_t k = 0; k < 3; ++k) {
      rgb[3 * i + k] = static_cast<std::uint8_t>(std::lround(255.0 * px[k]));
    }
  }
  return rgb;
}

GrayImage confine_to_quadrant(const GrayImage& image, Quadrant keep, double fill) {
  GrayImage out = image;
  const std::size_t hr = image.height() / 2, hc = image.width() / 2;
  const bool top = keep == Quadrant::top_left || keep == Quadrant::top_right;
  const bool left = keep == Quadrant::top_left || keep == Quadrant::bottom_left;
  for (std::size_t r = 0; r < image.height(); ++r) {
    for (std::size_t c = 0; c < image.width(); ++c) {
      if ((r < hr) != top || (c < hc) != left) out(r, c) = fill;
    }
  }
  return out;
}

GrayImage ridge_quadrant_fixture(const GrayImage& source, Quadrant keep, double fill) {
  const std::size_t hr = source.height() / 2, hc = source.width() / 2;
  GrayImage out(source.width(), source.height(), fill);
  const std::size_t r0 = keep == Quadrant::top_left || keep == Quadrant::top_right ? 0 : hr;
  const std::size_t c0 = keep == Quadrant::top_left || keep == Quadrant::bottom_left ? 0 : hc;
  for (std::size_t r = 0; r < hr; ++r) {
    for (std::size_t c = 0; c < hc; ++c) out(r0 + r, c0 + c) = source(hr / 2 + r, hc / 2 + c);
  }
  return out;
}

nlohmann::json heatmap_sidecar(const Heatmap& heatmap) {
  const auto mass = quadrant_mass(heatmap.upsampled);
  std::size_t peak = 0;
  for (std::size_t i = 1; i < heatmap.values.size(); ++i) {
    if (heatmap.values[i] > heatmap.values[peak]) peak = i;
  }
  return {{"target_layer", heatmap.target_layer},
          {"target_class", heatmap.target_class == 1 ? "female" : "male"},
          {"grid", {heatmap.rows, heatmap.cols}},
          {"output_size", {heatmap.upsampled.height(), heatmap.upsampled.width()}},
          {"raw_max", heatmap.raw_max},
          {"peak_cell", {heatmap.cols ? peak / heatmap.cols : 0, heatmap.cols ? peak % heatmap.cols : 0}},
          {"quadrant_mass",
           {{"top_left", mass.top_left},
            {"top_right", mass.top_right},
            {"bottom_left", mass.bottom_left},
            {"bottom_right", mass.bottom_right}}},
          {"values", heatmap.values}};
}

void write_explanation(const std::filesystem::path& dir, const std::string& stem,
                       const Heatmap& heatmap, const GrayImage& image, double alpha) {
  std::filesystem::create_directories(dir);
  const GrayImage base = image.width() == heatmap.upsampled.width() && image.height() == heatmap.upsampled.height()
                             ? image
                             : resize_bilinear(image, heatmap.upsampled.width(), heatmap.upsampled.height());
  write_png_gray(dir / (stem + "_heatmap.png"), heatmap.upsampled);
  write_png_rgb(dir / (stem + "_overlay.png"), base.width(), base.height(),
                overlay(heatmap.upsampled, base, alpha));
  std::ofstream out(dir / (stem + ".json"));
  if (!out) throw std::runtime_error("cannot write " + (dir / (stem + ".json")).string());
  out << heatmap_sidecar(heatmap).dump(2) << '\n';
}

}  // namespace rb
