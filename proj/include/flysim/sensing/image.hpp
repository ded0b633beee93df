#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "flysim/errors.hpp"

namespace flysim {

// Row-major, interleaved channels.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c = 1, T fill = T{})
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  T& at(int x, int y, int c = 0) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  const T& at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height && channels == o.channels; }
  bool operator==(const Image& o) const { return same_shape(o) && data == o.data; }
};

using DepthImage = Image<double>;
using SegmentationImage = Image<std::uint32_t>;
using RgbImage = Image<std::uint8_t>;

// Depth in millimeters, rounded and saturated to 16 bits.
inline Image<std::uint16_t> depth_to_u16_mm(const DepthImage& depth) {
  Image<std::uint16_t> out(depth.width, depth.height, depth.channels);
  for (std::size_t i = 0; i < depth.data.size(); ++i)
    out.data[i] = static_cast<std::uint16_t>(std::clamp(std::round(depth.data[i] * 1000.0), 0.0, 65535.0));
  return out;
}

inline Image<std::uint16_t> segmentation_to_u16(const SegmentationImage& seg) {
  Image<std::uint16_t> out(seg.width, seg.height, seg.channels);
  for (std::size_t i = 0; i < seg.data.size(); ++i)
    out.data[i] = static_cast<std::uint16_t>(std::min<std::uint32_t>(seg.data[i], 65535u));
  return out;
}

// Binary 16-bit PGM (P5, maxval 65535, big-endian samples).
inline void write_pgm16(const std::string& path, const Image<std::uint16_t>& img) {
  if (img.channels != 1) throw Error("write_pgm16: single-channel images only");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n65535\n";
  for (std::uint16_t v : img.data) {
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(bytes, 2);
  }
}

inline Image<std::uint16_t> read_pgm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  if (magic != "P5" || maxval != 65535 || w <= 0 || h <= 0) throw Error(path + ": not a 16-bit P5 image");
  Image<std::uint16_t> img(w, h);
  for (auto& v : img.data) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    v = static_cast<std::uint16_t>((b[0] << 8) | b[1]);
  }
  if (!in) throw Error(path + ": truncated image");
  return img;
}

}  // namespace flysim
