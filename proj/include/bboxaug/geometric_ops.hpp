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

#ifndef BBOXAUG_GEOMETRIC_OPS_HPP_
#define BBOXAUG_GEOMETRIC_OPS_HPP_

#include <cmath>
#include <stdexcept>
#include <string>

#include "bboxaug/geom.hpp"
#include "bboxaug/raster.hpp"

namespace bboxaug {

enum class GeoOpKind { ShearX, ShearY, TranslateX, TranslateY, Rotate };

inline const char* to_string(GeoOpKind kind) {
  switch (kind) {
    case GeoOpKind::ShearX: return "ShearX";
    case GeoOpKind::ShearY: return "ShearY";
    case GeoOpKind::TranslateX: return "TranslateX";
    case GeoOpKind::TranslateY: return "TranslateY";
    case GeoOpKind::Rotate: return "Rotate";
  }
  return "?";
}

/// Largest legal |value|: shear rate, pixels, or degrees.
inline double max_abs_value(GeoOpKind kind) {
  switch (kind) {
    case GeoOpKind::ShearX:
    case GeoOpKind::ShearY: return 0.3;
    case GeoOpKind::TranslateX:
    case GeoOpKind::TranslateY: return 150.0;
    case GeoOpKind::Rotate: return 30.0;
  }
  return 0.0;
}

/// Forward (source -> destination) matrix for an image of the given size.
/// Shears are anchored at the origin, rotation turns about the image center.
inline AffineMatrix geometric_matrix(GeoOpKind kind, double value, int width, int height) {
  switch (kind) {
    case GeoOpKind::ShearX: return AffineMatrix::shear_x(value);
    case GeoOpKind::ShearY: return AffineMatrix::shear_y(value);
    case GeoOpKind::TranslateX: return AffineMatrix::translation(value, 0);
    case GeoOpKind::TranslateY: return AffineMatrix::translation(0, value);
    case GeoOpKind::Rotate: return AffineMatrix::rotation(value, width / 2.0, height / 2.0);
  }
  throw std::invalid_argument("geometric_matrix: unknown kind");
}

inline void check_geometric_value(GeoOpKind kind, double value) {
  // Tolerance absorbs rounding in level -> value conversion (0.1 + 1.0 * 1.8).
  if (!std::isfinite(value) || std::abs(value) > max_abs_value(kind) + 1e-9) {
    throw std::invalid_argument(std::string(to_string(kind)) + ": value " +
                                std::to_string(value) + " outside [-" +
                                std::to_string(max_abs_value(kind)) + ", " +
                                std::to_string(max_abs_value(kind)) + "]");
  }
}

/// Warps the image (gray fill) and maps every box through the same matrix.
/// Boxes that clip to nothing, or below `min_box_area`, are removed.
inline AnnotatedImage apply_geometric(const AnnotatedImage& img, GeoOpKind kind, double value,
                                      double min_box_area = 0.0) {
  check_geometric_value(kind, value);
  const int w = img.image.width();
  const int h = img.image.height();
  const AffineMatrix m = geometric_matrix(kind, value, w, h);
  return {affine_warp(img.image, m, kGray), transform_boxes(img.boxes, m, w, h, min_box_area)};
}

}  // namespace bboxaug

#endif  // BBOXAUG_GEOMETRIC_OPS_HPP_
