#include "ridgebench/data/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

namespace rb {

namespace {

std::string header_preview(const std::vector<char>& head) {
  std::ostringstream out;
  for (char ch : head) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isprint(u)) {
      out << ch;
    } else {
      out << "\\x" << std::hex << static_cast<int>(u) << std::dec;
    }
  }
  return out.str();
}

// Next whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {}
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

RawImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  const std::string magic = pgm_token(in);
  RawImage img;
  try {
    img.width = std::stoul(pgm_token(in));
    img.height = std::stoul(pgm_token(in));
  } catch (const std::exception&) {
    throw ImageFormatError(path.string() + ": malformed PGM header");
  }
  const unsigned long maxval = std::stoul(pgm_token(in));
  if (maxval == 0 || maxval > 255) {
    throw ImageFormatError(path.string() + ": PGM maxval " + std::to_string(maxval) +
                           " is not 8-bit");
  }
  img.bytes.resize(img.width * img.height);
  if (magic == "P5") {
    if (!in.read(reinterpret_cast<char*>(img.bytes.data()),
                 static_cast<std::streamsize>(img.bytes.size()))) {
      throw ImageFormatError(path.string() + ": truncated PGM data");
    }
  } else {
    for (auto& b : img.bytes) {
      const std::string tok = pgm_token(in);
      if (tok.empty()) throw ImageFormatError(path.string() + ": truncated PGM data");
      b = static_cast<std::uint8_t>(std::stoul(tok));
    }
  }
  if (maxval != 255) {
    for (auto& b : img.bytes) b = static_cast<std::uint8_t>(std::lround(b * 255.0 / maxval));
  }
  return img;
}

RawImage read_png(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw ImageFormatError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageFormatError(path.string() + ": corrupt PNG");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (bit_depth != 8 || (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB &&
                         color != PNG_COLOR_TYPE_GRAY_ALPHA)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageFormatError(path.string() + ": PNG with bit depth " + std::to_string(bit_depth) +
                           " and colour type " + std::to_string(color) +
                           " is not 8-bit grayscale");
  }
  RawImage img;
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> buffer(stride * img.height);
  std::vector<png_bytep> rows(img.height);
  for (std::size_t r = 0; r < img.height; ++r) rows[r] = buffer.data() + r * stride;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  // Gray (+alpha) keeps channel 0; RGB is converted with Rec.601 luma.
  img.bytes.resize(img.width * img.height);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const std::uint8_t* px = rows[r] + c * img.channels;
      if (color == PNG_COLOR_TYPE_RGB) {
        img.bytes[r * img.width + c] =
            static_cast<std::uint8_t>(std::lround(0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]));
      } else {
        img.bytes[r * img.width + c] = px[0];
      }
    }
  }
  img.channels = 1;
  return img;
}

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
               int color_type, std::size_t channels, const std::uint8_t* data) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw ImageFormatError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageFormatError("failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(data + r * width * channels));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

RawImage read_raw_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageFormatError("cannot open " + path.string());
  std::vector<char> head(8, 0);
  in.read(head.data(), 8);
  head.resize(static_cast<std::size_t>(in.gcount()));
  in.close();
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (head.size() == 8 && std::equal(head.begin(), head.end(), png_sig,
                                     [](char a, unsigned char b) {
                                       return static_cast<unsigned char>(a) == b;
                                     })) {
    return read_png(path);
  }
  if (head.size() >= 2 && head[0] == 'P' && (head[1] == '5' || head[1] == '2')) {
    return read_pgm(path);
  }
  throw ImageFormatError(path.string() + ": unsupported image format (header \"" +
                         header_preview(head) + "\"); expected 8-bit PGM or PNG");
}

GrayImage resize_bilinear(const GrayImage& image, std::size_t width, std::size_t height) {
  if (image.width() == width && image.height() == height) return image;
  GrayImage out(width, height);
  const double sx = static_cast<double>(image.width()) / static_cast<double>(width);
  const double sy = static_cast<double>(image.height()) / static_cast<double>(height);
  const auto last_x = static_cast<long>(image.width()) - 1;
  const auto last_y = static_cast<long>(image.height()) - 1;
  for (std::size_t r = 0; r < height; ++r) {
    const double fy = std::max(0.0, (static_cast<double>(r) + 0.5) * sy - 0.5);
    const long y0 = std::min(static_cast<long>(fy), last_y);
    const long y1 = std::min(y0 + 1, last_y);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t c = 0; c < width; ++c) {
      const double fx = std::max(0.0, (static_cast<double>(c) + 0.5) * sx - 0.5);
      const long x0 = std::min(static_cast<long>(fx), last_x);
      const long x1 = std::min(x0 + 1, last_x);
      const double wx = fx - static_cast<double>(x0);
      const double top = (1 - wx) * image(y0, x0) + wx * image(y0, x1);
      const double bottom = (1 - wx) * image(y1, x0) + wx * image(y1, x1);
      out(r, c) = (1 - wy) * top + wy * bottom;
    }
  }
  return out;
}

GrayImage load_image(const std::filesystem::path& path, std::size_t target) {
  const RawImage raw = read_raw_image(path);
  GrayImage img(raw.width, raw.height);
  for (std::size_t i = 0; i < raw.bytes.size(); ++i) img.pixels()[i] = raw.bytes[i] / 255.0;
  return resize_bilinear(img, target, target);
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageFormatError("cannot open " + path.string() + " for writing");
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  for (double v : image.pixels()) out.put(static_cast<char>(quantize(v)));
  if (!out) throw ImageFormatError("failed writing " + path.string());
}

void write_png_gray(const std::filesystem::path& path, const GrayImage& image) {
  std::vector<std::uint8_t> bytes(image.size());
  std::transform(image.pixels().begin(), image.pixels().end(), bytes.begin(), quantize);
  write_png(path, image.width(), image.height(), PNG_COLOR_TYPE_GRAY, 1, bytes.data());
}

void write_png_rgb(const std::filesystem::path& path, std::size_t width, std::size_t height,
                   const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != width * height * 3) {
    throw ImageFormatError("write_png_rgb: buffer size does not match dimensions");
  }
  write_png(path, width, height, PNG_COLOR_TYPE_RGB, 3, rgb.data());
}

}  // namespace rb
