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

// Operations applied to the pixels inside each box. Box records never change.

#ifndef BBOXAUG_BBOX_ONLY_OPS_HPP_
#define BBOXAUG_BBOX_ONLY_OPS_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bboxaug/color_ops.hpp"
#include "bboxaug/geom.hpp"
#include "bboxaug/geometric_ops.hpp"
#include "bboxaug/random.hpp"
#include "bboxaug/raster.hpp"

namespace bboxaug {

enum class BBoxOnlyOpKind {
  Equalize,
  Solarize,
  Rotate,
  ShearX,
  ShearY,
  TranslateX,
  TranslateY,
  FlipLR,
  Cutout,
};

/// +1 or -1 with equal probability.
inline int bbox_translate_sign(Rng& rng) { return rng.uniform_index(2) == 0 ? 1 : -1; }

namespace detail {

inline bool is_geometric(BBoxOnlyOpKind kind) {
  switch (kind) {
    case BBoxOnlyOpKind::Rotate:
    case BBoxOnlyOpKind::ShearX:
    case BBoxOnlyOpKind::ShearY:
    case BBoxOnlyOpKind::TranslateX:
    case BBoxOnlyOpKind::TranslateY: return true;
    default: return false;
  }
}

inline GeoOpKind base_geometric(BBoxOnlyOpKind kind) {
  switch (kind) {
    case BBoxOnlyOpKind::Rotate: return GeoOpKind::Rotate;
    case BBoxOnlyOpKind::ShearX: return GeoOpKind::ShearX;
    case BBoxOnlyOpKind::ShearY: return GeoOpKind::ShearY;
    case BBoxOnlyOpKind::TranslateX: return GeoOpKind::TranslateX;
    case BBoxOnlyOpKind::TranslateY: return GeoOpKind::TranslateY;
    default: throw std::invalid_argument("base_geometric: not a geometric bbox-only kind");
  }
}

inline void check_bbox_only_value(BBoxOnlyOpKind kind, double value) {
  auto fail = [&](const char* range) {
    throw std::invalid_argument("bbox-only op: value " + std::to_string(value) + " outside " + range);
  };
  if (!std::isfinite(value)) fail("finite values");
  switch (kind) {
    case BBoxOnlyOpKind::Solarize:
      if (value < 0 || value > 256) fail("[0, 256]");
      break;
    case BBoxOnlyOpKind::Cutout:
      if (value < 0 || value > 60) fail("[0, 60]");
      break;
    case BBoxOnlyOpKind::Equalize:
    case BBoxOnlyOpKind::FlipLR: break;
    default: check_geometric_value(base_geometric(kind), value);
  }
}

inline ImageBuffer apply_to_crop(const ImageBuffer& patch, BBoxOnlyOpKind kind, double value, Rng& rng) {
  if (is_geometric(kind)) {
    const AffineMatrix m =
        geometric_matrix(base_geometric(kind), value, patch.width(), patch.height());
    return affine_warp(patch, m, kGray);
  }
  switch (kind) {
    case BBoxOnlyOpKind::Equalize: return equalize(patch);
    case BBoxOnlyOpKind::Solarize: return solarize(patch, static_cast<int>(std::lround(value)));
    case BBoxOnlyOpKind::FlipLR: return flip_horizontal(patch);
    case BBoxOnlyOpKind::Cutout: return cutout(patch, static_cast<int>(std::lround(value)), rng);
    default: throw std::invalid_argument("apply_bbox_only: unknown kind");
  }
}

}  // namespace detail

/// For each box in annotation order, with probability `prob`, replaces the
/// integer crop [floor(x_min), ceil(x_max)) x [floor(y_min), ceil(y_max)) by
/// the base op applied to that crop as a standalone image. Geometric kinds
/// act in crop coordinates; content moved out of the crop is lost.
///
/// Random draws per box: one uniform for the gate, then whatever the base
/// op consumes (Cutout only). Overlapping boxes see earlier boxes' output.
inline AnnotatedImage apply_bbox_only(const AnnotatedImage& img, BBoxOnlyOpKind kind, double value,
                                      double prob, Rng& rng) {
  detail::check_bbox_only_value(kind, value);
  if (!(prob >= 0.0 && prob <= 1.0)) {
    throw std::invalid_argument("apply_bbox_only: prob must be in [0, 1]");
  }
  AnnotatedImage out = img;
  const int w = img.image.width();
  const int h = img.image.height();
  for (const BBox& b : img.boxes) {
    if (!rng.bernoulli(prob)) continue;
    const int x0 = std::clamp(static_cast<int>(std::floor(b.x_min)), 0, w);
    const int y0 = std::clamp(static_cast<int>(std::floor(b.y_min)), 0, h);
    const int x1 = std::clamp(static_cast<int>(std::ceil(b.x_max)), 0, w);
    const int y1 = std::clamp(static_cast<int>(std::ceil(b.y_max)), 0, h);
    if (x1 <= x0 || y1 <= y0) continue;
    const ImageBuffer patch = crop(out.image, x0, y0, x1 - x0, y1 - y0);
    paste(out.image, detail::apply_to_crop(patch, kind, value, rng), x0, y0);
  }
  return out;
}

}  // namespace bboxaug

#endif  // BBOXAUG_BBOX_ONLY_OPS_HPP_
