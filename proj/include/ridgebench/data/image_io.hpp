#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "ridgebench/data/gray_image.hpp"

namespace rb {

class ImageFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit raster as stored on disk, before normalization.
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> bytes;
};

/// Reads an 8-bit grayscale PGM (P2/P5) or PNG.
RawImage read_raw_image(const std::filesystem::path& path);

/// Bilinear resampling with half-pixel centres (align_corners = false).
GrayImage resize_bilinear(const GrayImage& image, std::size_t width, std::size_t height);

/// Reads, resizes to target×target and scales to [0,1] (divide by 255).
GrayImage load_image(const std::filesystem::path& path, std::size_t target = 256);

/// Writes a binary PGM, quantizing with round(v·255).
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

void write_png_gray(const std::filesystem::path& path, const GrayImage& image);
/// `rgb` is interleaved 8-bit RGB, width·height·3 bytes.
void write_png_rgb(const std::filesystem::path& path, std::size_t width, std::size_t height,
                   const std::vector<std::uint8_t>& rgb);

}  // namespace rb
