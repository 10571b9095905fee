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

// Whole-image operations that leave box coordinates alone.

#ifndef BBOXAUG_COLOR_OPS_HPP_
#define BBOXAUG_COLOR_OPS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "bboxaug/geom.hpp"
#include "bboxaug/random.hpp"
#include "bboxaug/raster.hpp"

namespace bboxaug {

enum class ColorOpKind { Equalize, Solarize, SolarizeAdd, Contrast, Color, Brightness, Sharpness, Cutout };

inline std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return clamp_u8(0.299 * r + 0.587 * g + 0.114 * b);
}

/// Histogram equalization, per channel, with the integer lookup-table rule
/// used by PIL: the highest occupied bin is left out of the step size.
inline ImageBuffer equalize(const ImageBuffer& src) {
  ImageBuffer out = src;
  auto dst = out.bytes();
  const std::uint64_t total = src.pixel_count();
  for (int c = 0; c < 3; ++c) {
    const Histogram h = histogram(src, c);
    int occupied = 0;
    int last = -1;
    for (int i = 0; i < 256; ++i) {
      if (h[i] != 0) {
        ++occupied;
        last = i;
      }
    }
    if (occupied <= 1) continue;
    const std::uint64_t step = (total - h[last]) / 255;
    if (step == 0) continue;
    std::array<std::uint8_t, 256> lut{};
    std::uint64_t n = step / 2;
    for (int i = 0; i < 256; ++i) {
      lut[i] = static_cast<std::uint8_t>(std::min<std::uint64_t>(n / step, 255));
      n += h[i];
    }
    for (std::size_t i = static_cast<std::size_t>(c); i < dst.size(); i += 3) dst[i] = lut[dst[i]];
  }
  return out;
}

/// Every channel value v >= threshold becomes 255 - v. threshold in [0, 256].
inline ImageBuffer solarize(const ImageBuffer& src, int threshold) {
  if (threshold < 0 || threshold > 256) {
    throw std::invalid_argument("solarize: threshold must be in [0, 256], got " +
                                std::to_string(threshold));
  }
  ImageBuffer out = src;
  for (auto& v : out.bytes()) {
    if (v >= threshold) v = static_cast<std::uint8_t>(255 - v);
  }
  return out;
}

/// Every channel value v < 128 gets `addition` added (saturating).
inline ImageBuffer solarize_add(const ImageBuffer& src, int addition) {
  if (addition < 0 || addition > 110) {
    throw std::invalid_argument("solarize_add: addition must be in [0, 110], got " +
                                std::to_string(addition));
  }
  ImageBuffer out = src;
  for (auto& v : out.bytes()) {
    if (v < 128) v = static_cast<std::uint8_t>(std::min(255, v + addition));
  }
  return out;
}

namespace detail {

inline ImageBuffer grayscale(const ImageBuffer& src) {
  ImageBuffer out = src;
  auto px = out.bytes();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    const std::uint8_t l = luminance(px[i], px[i + 1], px[i + 2]);
    px[i] = px[i + 1] = px[i + 2] = l;
  }
  return out;
}

inline ImageBuffer mean_gray(const ImageBuffer& src) {
  const auto px = src.bytes();
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < px.size(); i += 3) sum += luminance(px[i], px[i + 1], px[i + 2]);
  const auto mean = clamp_u8(static_cast<double>(sum) / static_cast<double>(src.pixel_count()));
  return ImageBuffer(src.width(), src.height(), Rgb{mean, mean, mean});
}

// 3x3 kernel [[1,1,1],[1,5,1],[1,1,1]] / 13 on interior pixels; the border
// row and column are copied unchanged.
inline ImageBuffer smooth(const ImageBuffer& src) {
  ImageBuffer out = src;
  const int w = src.width();
  const int h = src.height();
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        int sum = 4 * src.channel(x, y, c);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) sum += src.channel(x + dx, y + dy, c);
        }
        out.bytes()[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
            static_cast<std::uint8_t>((sum + 6) / 13);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Blend toward a kind-specific degenerate image. factor 1 is the identity.
/// The factor is not range-checked here; the policy layer restricts it to
/// [0.1, 1.9].
inline ImageBuffer enhance(const ImageBuffer& src, ColorOpKind kind, double factor) {
  switch (kind) {
    case ColorOpKind::Contrast:
      return blend(detail::mean_gray(src), src, factor);
    case ColorOpKind::Color:
      return blend(detail::grayscale(src), src, factor);
    case ColorOpKind::Brightness:
      return blend(ImageBuffer(src.width(), src.height()), src, factor);
    case ColorOpKind::Sharpness:
      return blend(detail::smooth(src), src, factor);
    default:
      throw std::invalid_argument("enhance: kind is not one of Contrast, Color, Brightness, Sharpness");
  }
}

/// Fills an axis-aligned square of side `size`, centred on a uniformly
/// drawn pixel and clipped to the image, with gray. size 0 draws nothing.
inline ImageBuffer cutout(const ImageBuffer& src, int size, Rng& rng) {
  if (size < 0) throw std::invalid_argument("cutout: size must be >= 0");
  if (size == 0) return src;
  const auto cx = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(src.width())));
  const auto cy = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(src.height())));
  const int x0 = std::max(0, cx - size / 2);
  const int y0 = std::max(0, cy - size / 2);
  const int x1 = std::min(src.width(), cx - size / 2 + size);
  const int y1 = std::min(src.height(), cy - size / 2 + size);
  ImageBuffer out = src;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) out.set(x, y, kGray);
  }
  return out;
}

/// Dispatches a color op with an already-resolved value (threshold,
/// addition, factor or patch size). Boxes pass through untouched.
inline AnnotatedImage apply_color(const AnnotatedImage& img, ColorOpKind kind, double value, Rng& rng) {
  AnnotatedImage out{img.image, img.boxes};
  switch (kind) {
    case ColorOpKind::Equalize:
      out.image = equalize(img.image);
      break;
    case ColorOpKind::Solarize:
      out.image = solarize(img.image, static_cast<int>(std::lround(value)));
      break;
    case ColorOpKind::SolarizeAdd:
      out.image = solarize_add(img.image, static_cast<int>(std::lround(value)));
      break;
    case ColorOpKind::Cutout:
      out.image = cutout(img.image, static_cast<int>(std::lround(value)), rng);
      break;
    default:
      out.image = enhance(img.image, kind, value);
      break;
  }
  return out;
}

}  // namespace bboxaug

#endif  // BBOXAUG_COLOR_OPS_HPP_
