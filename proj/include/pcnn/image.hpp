#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "pcnn/error.hpp"

namespace pcnn {

/// 8-bit image, row-major, channel-interleaved. channels is 1 (gray) or 3 (RGB).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint8_t> pixels;

  int64_t pixel_count() const {
    return static_cast<int64_t>(width) * height * channels;
  }
};

namespace detail {

// Netpbm header token: skips whitespace and '#' comment lines.
inline std::string pnm_token(std::istream& in) {
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

inline int pnm_int(std::istream& in, const char* what) {
  const std::string tok = pnm_token(in);
  if (tok.empty()) throw FormatError(std::string("missing ") + what + " in header");
  int value = 0;
  for (char c : tok) {
    if (c < '0' || c > '9')
      throw FormatError(std::string("bad ") + what + " '" + tok + "'");
    value = value * 10 + (c - '0');
    if (value > 1 << 30) throw FormatError(std::string(what) + " out of range");
  }
  return value;
}

}  // namespace detail

/// Reads a binary PGM (P5) or PPM (P6) file with maxval 255.
inline Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image file: " + path);

  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (!in || m0 != 'P' || (m1 != '5' && m1 != '6'))
    throw FormatError(path + ": not a binary PGM/PPM file");

  Image img;
  img.channels = (m1 == '5') ? 1 : 3;
  img.width = detail::pnm_int(in, "width");
  img.height = detail::pnm_int(in, "height");
  const int maxval = detail::pnm_int(in, "maxval");
  if (img.width < 1 || img.height < 1)
    throw FormatError(path + ": bad image dimensions");
  if (maxval != 255)
    throw FormatError(path + ": unsupported maxval " + std::to_string(maxval));

  img.pixels.resize(static_cast<size_t>(img.pixel_count()));
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw FormatError(path + ": truncated pixel data");
  return img;
}

/// Writes P5 (1 channel) or P6 (3 channels), maxval 255.
inline void write_image(const Image& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    throw ArgumentError("write_image supports 1 or 3 channels");
  if (static_cast<int64_t>(img.pixels.size()) != img.pixel_count())
    throw ArgumentError("write_image: pixel buffer does not match dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image file: " + path);
  out << (img.channels == 1 ? "P5" : "P6") << '\n'
      << img.width << ' ' << img.height << '\n'
      << "255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoError("short write: " + path);
}

/// BT.601 luma: round(0.299 R + 0.587 G + 0.114 B), round half up.
inline Image rgb_to_gray(const Image& img) {
  if (img.channels != 3) throw ArgumentError("rgb_to_gray needs a 3-channel image");
  Image gray;
  gray.width = img.width;
  gray.height = img.height;
  gray.channels = 1;
  gray.pixels.resize(static_cast<size_t>(img.width) * img.height);
  for (size_t i = 0; i < gray.pixels.size(); ++i) {
    const double r = img.pixels[3 * i];
    const double g = img.pixels[3 * i + 1];
    const double b = img.pixels[3 * i + 2];
    double v = std::floor(0.299 * r + 0.587 * g + 0.114 * b + 0.5);
    if (v > 255.0) v = 255.0;
    gray.pixels[i] = static_cast<uint8_t>(v);
  }
  return gray;
}

/// Bilinear resize with half-pixel centers: src = (dst + 0.5) * scale - 0.5,
/// clamped to the source grid; output rounded half up to 8 bits.
inline Image resize_bilinear(const Image& img, int out_w, int out_h) {
  if (img.channels != 1) throw ArgumentError("resize_bilinear needs a 1-channel image");
  if (out_w < 1 || out_h < 1) throw ArgumentError("resize target must be >= 1x1");
  if (out_w == img.width && out_h == img.height) return img;

  Image out;
  out.width = out_w;
  out.height = out_h;
  out.channels = 1;
  out.pixels.resize(static_cast<size_t>(out_w) * out_h);

  const double scale_x = static_cast<double>(img.width) / out_w;
  const double scale_y = static_cast<double>(img.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    double sy = (y + 0.5) * scale_y - 0.5;
    if (sy < 0.0) sy = 0.0;
    if (sy > img.height - 1) sy = img.height - 1;
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      double sx = (x + 0.5) * scale_x - 0.5;
      if (sx < 0.0) sx = 0.0;
      if (sx > img.width - 1) sx = img.width - 1;
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - x0;

      const double p00 = img.pixels[static_cast<size_t>(y0) * img.width + x0];
      const double p01 = img.pixels[static_cast<size_t>(y0) * img.width + x1];
      const double p10 = img.pixels[static_cast<size_t>(y1) * img.width + x0];
      const double p11 = img.pixels[static_cast<size_t>(y1) * img.width + x1];
      const double top = p00 + fx * (p01 - p00);
      const double bot = p10 + fx * (p11 - p10);
      double v = std::floor(top + fy * (bot - top) + 0.5);
      if (v > 255.0) v = 255.0;
      if (v < 0.0) v = 0.0;
      out.pixels[static_cast<size_t>(y) * out_w + x] = static_cast<uint8_t>(v);
    }
  }
  return out;
}

}  // namespace pcnn
