// Copyright 2026 The bboxaug Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BBOXAUG_RASTER_HPP_
#define BBOXAUG_RASTER_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace bboxaug {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Fill for every vacated pixel (geometric warps, cutout, padding).
inline constexpr Rgb kGray{128, 128, 128};

/// Row-major 8-bit RGB raster. Pixel (x, y) lives at index y * width + x.
class ImageBuffer {
 public:
  ImageBuffer(int width, int height, Rgb fill = {}) : width_(width), height_(height) {
    check_dims(width, height);
    data_.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < data_.size(); i += 3) {
      data_[i] = fill.r;
      data_[i + 1] = fill.g;
      data_[i + 2] = fill.b;
    }
  }

  /// Takes ownership of interleaved RGB bytes.
  ImageBuffer(int width, int height, std::vector<std::uint8_t> rgb)
      : width_(width), height_(height), data_(std::move(rgb)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height * 3) {
      throw std::invalid_argument("ImageBuffer: expected " +
                                  std::to_string(static_cast<std::size_t>(width) * height * 3) +
                                  " bytes, got " + std::to_string(data_.size()));
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  Rgb at(int x, int y) const {
    const std::uint8_t* p = &data_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    std::uint8_t* p = &data_[offset(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  std::uint8_t channel(int x, int y, int c) const { return data_[offset(x, y) + c]; }

  std::span<std::uint8_t> bytes() { return data_; }
  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> row(int y) {
    return std::span<std::uint8_t>(data_).subspan(offset(0, y), static_cast<std::size_t>(width_) * 3);
  }
  std::span<const std::uint8_t> row(int y) const {
    return std::span<const std::uint8_t>(data_).subspan(offset(0, y),
                                                        static_cast<std::size_t>(width_) * 3);
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  static void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("ImageBuffer: dimensions must be >= 1, got " +
                                  std::to_string(width) + "x" + std::to_string(height));
    }
  }
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

/// (x, y) -> (a*x + b*y + c, d*x + e*y + f), in pixel coordinates where the
/// pixel (i, j) covers [i, i+1) x [j, j+1).
struct AffineMatrix {
  double a = 1, b = 0, c = 0;
  double d = 0, e = 1, f = 0;

  static AffineMatrix identity() { return {}; }
  static AffineMatrix translation(double tx, double ty) { return {1, 0, tx, 0, 1, ty}; }
  static AffineMatrix shear_x(double rate) { return {1, rate, 0, 0, 1, 0}; }
  static AffineMatrix shear_y(double rate) { return {1, 0, 0, rate, 1, 0}; }

  /// Rotation by `degrees` about (cx, cy). Multiples of 90 degrees use exact
  /// sine/cosine so quarter turns map pixel centers onto pixel centers.
  static AffineMatrix rotation(double degrees, double cx, double cy) {
    double cos_t = 0;
    double sin_t = 0;
    if (std::fmod(degrees, 90.0) == 0.0) {
      static constexpr std::array<std::pair<double, double>, 4> kQuarter{
          {{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
      const long q = ((std::lround(degrees / 90.0) % 4) + 4) % 4;
      std::tie(cos_t, sin_t) = kQuarter[static_cast<std::size_t>(q)];
    } else {
      const double rad = degrees * (3.14159265358979323846 / 180.0);
      cos_t = std::cos(rad);
      sin_t = std::sin(rad);
    }
    return {cos_t, -sin_t, cx - cos_t * cx + sin_t * cy,
            sin_t, cos_t,  cy - sin_t * cx - cos_t * cy};
  }

  double determinant() const { return a * e - b * d; }
  bool invertible() const {
    const double det = determinant();
    return det != 0.0 && std::isfinite(det);
  }

  AffineMatrix inverse() const {
    if (!invertible()) throw std::invalid_argument("AffineMatrix: matrix is not invertible");
    const double det = determinant();
    return {e / det, -b / det, (b * f - c * e) / det,
            -d / det, a / det,  (c * d - a * f) / det};
  }

  std::pair<double, double> apply(double x, double y) const {
    return {a * x + b * y + c, d * x + e * y + f};
  }

  friend bool operator==(const AffineMatrix&, const AffineMatrix&) = default;
};

/// Nearest integer, ties toward the lower value.
inline long round_half_down(double v) { return static_cast<long>(std::ceil(v - 0.5)); }

/// Inverse-mapped nearest-neighbor warp. Output pixel (x, y) samples the
/// source at m^-1 (x + 0.5, y + 0.5); samples outside the source are `fill`.
inline ImageBuffer affine_warp(const ImageBuffer& src, const AffineMatrix& m, Rgb fill = kGray) {
  const AffineMatrix inv = m.inverse();
  const int w = src.width();
  const int h = src.height();
  ImageBuffer out(w, h, fill);
  const auto in = src.bytes();
  auto dst = out.bytes();
  for (int y = 0; y < h; ++y) {
    const double py = y + 0.5;
    for (int x = 0; x < w; ++x) {
      const double px = x + 0.5;
      const auto [sx, sy] = inv.apply(px, py);
      const long ix = round_half_down(sx - 0.5);
      const long iy = round_half_down(sy - 0.5);
      if (ix < 0 || iy < 0 || ix >= w || iy >= h) continue;
      const std::size_t s = (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * 3;
      const std::size_t o = (static_cast<std::size_t>(y) * w + x) * 3;
      dst[o] = in[s];
      dst[o + 1] = in[s + 1];
      dst[o + 2] = in[s + 2];
    }
  }
  return out;
}

using Histogram = std::array<std::uint64_t, 256>;

inline Histogram histogram(const ImageBuffer& src, int channel) {
  if (channel < 0 || channel > 2) {
    throw std::invalid_argument("histogram: channel must be 0, 1 or 2");
  }
  Histogram h{};
  const auto bytes = src.bytes();
  for (std::size_t i = static_cast<std::size_t>(channel); i < bytes.size(); i += 3) ++h[bytes[i]];
  return h;
}

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

/// Per channel clamp(round(d + factor * (o - d))). factor 1 returns `original`.
inline ImageBuffer blend(const ImageBuffer& degenerate, const ImageBuffer& original, double factor) {
  if (degenerate.width() != original.width() || degenerate.height() != original.height()) {
    throw std::invalid_argument("blend: dimension mismatch");
  }
  ImageBuffer out = original;
  const auto d = degenerate.bytes();
  const auto o = original.bytes();
  auto dst = out.bytes();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double lo = d[i];
    dst[i] = clamp_u8(lo + factor * (static_cast<double>(o[i]) - lo));
  }
  return out;
}

/// Copies the w x h window at (x0, y0). The window must lie inside `src`.
inline ImageBuffer crop(const ImageBuffer& src, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || x0 + w > src.width() || y0 + h > src.height()) {
    throw std::invalid_argument("crop: window outside image");
  }
  ImageBuffer out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto s = src.row(y0 + y).subspan(static_cast<std::size_t>(x0) * 3,
                                           static_cast<std::size_t>(w) * 3);
    std::copy(s.begin(), s.end(), out.row(y).begin());
  }
  return out;
}

inline void paste(ImageBuffer& dst, const ImageBuffer& patch, int x0, int y0) {
  if (x0 < 0 || y0 < 0 || x0 + patch.width() > dst.width() ||
      y0 + patch.height() > dst.height()) {
    throw std::invalid_argument("paste: patch outside image");
  }
  for (int y = 0; y < patch.height(); ++y) {
    const auto s = patch.row(y);
    std::copy(s.begin(), s.end(), dst.row(y0 + y).begin() + static_cast<std::ptrdiff_t>(x0) * 3);
  }
}

inline ImageBuffer flip_horizontal(const ImageBuffer& src) {
  ImageBuffer out = src;
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) out.set(src.width() - 1 - x, y, src.at(x, y));
  }
  return out;
}

}  // namespace bboxaug

#endif  // BBOXAUG_RASTER_HPP_
