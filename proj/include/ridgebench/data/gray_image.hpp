#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rb {

/// Single-channel raster with values in [0,1], row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), pixels_(width * height, fill) {}
  GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (pixels_.size() != width_ * height_) {
      throw std::invalid_argument("GrayImage: pixel count does not match dimensions");
    }
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  double operator()(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  double& operator()(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }

  const std::vector<double>& pixels() const { return pixels_; }
  std::vector<double>& pixels() { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> pixels_;
};

}  // namespace rb
