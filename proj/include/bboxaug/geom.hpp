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

#ifndef BBOXAUG_GEOM_HPP_
#define BBOXAUG_GEOM_HPP_

#include <algorithm>
#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bboxaug/raster.hpp"

namespace bboxaug {

/// Axis-aligned box in float pixel coordinates, [x_min, x_max] x [y_min, y_max].
struct BBox {
  double x_min = 0;
  double y_min = 0;
  double x_max = 0;
  double y_max = 0;
  int category_id = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline bool box_within(const BBox& b, double width, double height) {
  return 0 <= b.x_min && b.x_min <= b.x_max && b.x_max <= width &&
         0 <= b.y_min && b.y_min <= b.y_max && b.y_max <= height;
}

struct AnnotatedImage {
  ImageBuffer image;
  std::vector<BBox> boxes;

  friend bool operator==(const AnnotatedImage&, const AnnotatedImage&) = default;
};

inline bool annotations_valid(const AnnotatedImage& img) {
  return std::all_of(img.boxes.begin(), img.boxes.end(), [&](const BBox& b) {
    return box_within(b, img.image.width(), img.image.height());
  });
}

/// Axis-aligned envelope of the four corners of `b` mapped through `m`.
/// Not clipped.
inline BBox envelope(const BBox& b, const AffineMatrix& m) {
  const std::array<std::pair<double, double>, 4> corners{
      m.apply(b.x_min, b.y_min), m.apply(b.x_max, b.y_min),
      m.apply(b.x_min, b.y_max), m.apply(b.x_max, b.y_max)};
  BBox out{corners[0].first, corners[0].second, corners[0].first, corners[0].second,
           b.category_id};
  for (const auto& [x, y] : corners) {
    out.x_min = std::min(out.x_min, x);
    out.x_max = std::max(out.x_max, x);
    out.y_min = std::min(out.y_min, y);
    out.y_max = std::max(out.y_max, y);
  }
  return out;
}

/// Envelope of `b` under `m`, clipped to [0, width] x [0, height].
///
/// Returns nullopt when the clipped box has no width or height, or when its
/// area falls below `min_box_area` (0 keeps every non-empty box).
inline std::optional<BBox> transform_bbox(const BBox& b, const AffineMatrix& m, double width,
                                          double height, double min_box_area = 0.0) {
  if (!m.invertible()) throw std::invalid_argument("transform_bbox: matrix is not invertible");
  BBox env = envelope(b, m);
  env.x_min = std::clamp(env.x_min, 0.0, width);
  env.x_max = std::clamp(env.x_max, 0.0, width);
  env.y_min = std::clamp(env.y_min, 0.0, height);
  env.y_max = std::clamp(env.y_max, 0.0, height);
  if (!(env.width() > 0) || !(env.height() > 0)) return std::nullopt;
  if (env.area() < min_box_area) return std::nullopt;
  return env;
}

/// area(unclipped envelope) / area(b).
inline double envelope_area_ratio(const BBox& b, const AffineMatrix& m) {
  if (!(b.area() > 0)) throw std::invalid_argument("envelope_area_ratio: box has zero area");
  return envelope(b, m).area() / b.area();
}

/// Maps every box through `m`, dropping boxes that clip away.
inline std::vector<BBox> transform_boxes(const std::vector<BBox>& boxes, const AffineMatrix& m,
                                         double width, double height, double min_box_area = 0.0) {
  std::vector<BBox> out;
  out.reserve(boxes.size());
  for (const BBox& b : boxes) {
    if (auto t = transform_bbox(b, m, width, height, min_box_area)) out.push_back(*t);
  }
  return out;
}

}  // namespace bboxaug

#endif  // BBOXAUG_GEOM_HPP_
