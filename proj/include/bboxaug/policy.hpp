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

#ifndef BBOXAUG_POLICY_HPP_
#define BBOXAUG_POLICY_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "bboxaug/bbox_only_ops.hpp"
#include "bboxaug/color_ops.hpp"
#include "bboxaug/geom.hpp"
#include "bboxaug/geometric_ops.hpp"
#include "bboxaug/random.hpp"

namespace bboxaug {

// The first 22 kinds are the search vocabulary, in token order. NoOp is
// legal in policies but never searched.
enum class OpKind : int {
  Equalize,
  Solarize,
  SolarizeAdd,
  Contrast,
  Color,
  Brightness,
  Sharpness,
  Cutout,
  ShearX,
  ShearY,
  TranslateX,
  TranslateY,
  Rotate,
  BBoxOnlyEqualize,
  BBoxOnlySolarize,
  BBoxOnlyRotate,
  BBoxOnlyShearX,
  BBoxOnlyShearY,
  BBoxOnlyTranslateX,
  BBoxOnlyTranslateY,
  BBoxOnlyFlipLR,
  BBoxOnlyCutout,
  NoOp,
};

inline constexpr int kNumSearchableKinds = 22;
inline constexpr int kNumKinds = 23;

enum class OpFamily { Color, Geometric, BBoxOnly, None };

inline constexpr std::array<std::string_view, kNumKinds> kOpNames{
    "Equalize",
    "Solarize",
    "SolarizeAdd",
    "Contrast",
    "Color",
    "Brightness",
    "Sharpness",
    "Cutout",
    "ShearX",
    "ShearY",
    "TranslateX",
    "TranslateY",
    "Rotate",
    "BBox_Only_Equalize",
    "BBox_Only_Solarize",
    "BBox_Only_Rotate",
    "BBox_Only_ShearX",
    "BBox_Only_ShearY",
    "BBox_Only_TranslateX",
    "BBox_Only_TranslateY",
    "BBox_Only_FlipLR",
    "BBox_Only_Cutout",
    "NoOp",
};

inline std::string_view op_name(OpKind kind) { return kOpNames[static_cast<std::size_t>(kind)]; }

/// Accepts the canonical names plus "No operation" for NoOp.
inline std::optional<OpKind> op_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i) {
    if (kOpNames[i] == name) return static_cast<OpKind>(i);
  }
  if (name == "No operation") return OpKind::NoOp;
  return std::nullopt;
}

inline OpFamily op_family(OpKind kind) {
  const int k = static_cast<int>(kind);
  if (k <= static_cast<int>(OpKind::Cutout)) return OpFamily::Color;
  if (k <= static_cast<int>(OpKind::Rotate)) return OpFamily::Geometric;
  if (k <= static_cast<int>(OpKind::BBoxOnlyCutout)) return OpFamily::BBoxOnly;
  return OpFamily::None;
}

inline ColorOpKind as_color(OpKind kind) { return static_cast<ColorOpKind>(static_cast<int>(kind)); }
inline GeoOpKind as_geometric(OpKind kind) {
  return static_cast<GeoOpKind>(static_cast<int>(kind) - static_cast<int>(OpKind::ShearX));
}
inline BBoxOnlyOpKind as_bbox_only(OpKind kind) {
  return static_cast<BBoxOnlyOpKind>(static_cast<int>(kind) - static_cast<int>(OpKind::BBoxOnlyEqualize));
}

/// Native value range of a kind's magnitude.
///   symmetric: value = +-(scale/10) * hi, sign drawn at application time
///   inverted:  value = hi - (scale/10) * (hi - lo)  (stronger = lower)
///   otherwise: value = lo + (scale/10) * (hi - lo)
struct MagnitudeRange {
  bool has_magnitude = false;
  double lo = 0;
  double hi = 0;
  bool symmetric = false;
  bool inverted = false;
};

inline std::array<MagnitudeRange, kNumKinds> default_magnitude_ranges() {
  const MagnitudeRange none{};
  const MagnitudeRange solarize{true, 0, 256, false, true};
  const MagnitudeRange solarize_add{true, 0, 110, false, false};
  const MagnitudeRange factor{true, 0.1, 1.9, false, false};
  const MagnitudeRange cutout{true, 0, 60, false, false};
  const MagnitudeRange shear{true, -0.3, 0.3, true, false};
  const MagnitudeRange translate{true, -150, 150, true, false};
  const MagnitudeRange rotate{true, -30, 30, true, false};
  return {none,   solarize, solarize_add, factor,    factor,    factor,    factor,    cutout,
          shear,  shear,    translate,    translate, rotate,    none,      solarize,  rotate,
          shear,  shear,    translate,    translate, none,      cutout,    none};
}

/// Discretization grid: L magnitude levels spanning the 0-10 scale and M
/// probability levels spanning [0, 1].
struct LevelConfig {
  int magnitude_levels = 6;
  int probability_levels = 6;
  std::array<MagnitudeRange, kNumKinds> ranges = default_magnitude_ranges();

  void validate() const {
    if (magnitude_levels < 2 || probability_levels < 2) {
      throw std::invalid_argument("LevelConfig: L and M must be >= 2");
    }
  }
  const MagnitudeRange& range(OpKind kind) const { return ranges[static_cast<std::size_t>(kind)]; }
};

inline bool has_magnitude(OpKind kind, const LevelConfig& cfg = {}) {
  return cfg.range(kind).has_magnitude;
}

inline double probability_value(int level, const LevelConfig& cfg = {}) {
  if (level < 0 || level >= cfg.probability_levels) {
    throw std::invalid_argument("probability_value: level " + std::to_string(level) +
                                " outside [0, " + std::to_string(cfg.probability_levels - 1) + "]");
  }
  return static_cast<double>(level) / (cfg.probability_levels - 1);
}

/// Level -> position on the 0-10 magnitude scale.
inline double magnitude_scale(int level, const LevelConfig& cfg = {}) {
  if (level < 0 || level >= cfg.magnitude_levels) {
    throw std::invalid_argument("magnitude_scale: level " + std::to_string(level) +
                                " outside [0, " + std::to_string(cfg.magnitude_levels - 1) + "]");
  }
  return 10.0 * level / (cfg.magnitude_levels - 1);
}

/// Native value for a 0-10 scale. Symmetric ranges consume one random draw
/// for the sign, even at scale 0.
inline double magnitude_from_scale(OpKind kind, double scale, const LevelConfig& cfg, Rng& rng) {
  const MagnitudeRange& r = cfg.range(kind);
  if (!r.has_magnitude) {
    throw std::invalid_argument("magnitude: " + std::string(op_name(kind)) + " takes no magnitude");
  }
  if (!(scale >= 0.0 && scale <= 10.0)) {
    throw std::invalid_argument("magnitude: scale must be in [0, 10]");
  }
  const double frac = scale / 10.0;
  if (r.symmetric) return bbox_translate_sign(rng) * (frac * r.hi);
  if (r.inverted) return r.hi - frac * (r.hi - r.lo);
  return r.lo + frac * (r.hi - r.lo);
}

inline double magnitude_value(OpKind kind, int level, const LevelConfig& cfg, Rng& rng) {
  if (!has_magnitude(kind, cfg)) {
    throw std::invalid_argument("magnitude_value: " + std::string(op_name(kind)) +
                                " takes no magnitude");
  }
  return magnitude_from_scale(kind, magnitude_scale(level, cfg), cfg, rng);
}

/// One (operation, probability, magnitude) triplet. `prob` is on [0, 1] and
/// `magnitude` on the 0-10 scale, as written in policy files.
struct OpSpec {
  OpKind kind = OpKind::NoOp;
  double prob = 0;
  double magnitude = 0;

  friend bool operator==(const OpSpec&, const OpSpec&) = default;
};

struct SubPolicy {
  std::vector<OpSpec> ops;

  friend bool operator==(const SubPolicy&, const SubPolicy&) = default;
};

struct Policy {
  std::vector<SubPolicy> sub_policies;

  friend bool operator==(const Policy&, const Policy&) = default;
};

enum class BBoxOnlyGating {
  kPerBox,  // the op probability gates each box independently
  kPerOp,   // one coin for the op, then every box is transformed
};

struct ExecutionOptions {
  LevelConfig levels;
  BBoxOnlyGating gating = BBoxOnlyGating::kPerBox;
  double min_box_area = 0.0;
};

/// Applies a kind with an already-resolved value, unconditionally.
inline AnnotatedImage apply_op(const AnnotatedImage& img, OpKind kind, double value, Rng& rng,
                               const ExecutionOptions& opts = {}) {
  switch (op_family(kind)) {
    case OpFamily::Color: return apply_color(img, as_color(kind), value, rng);
    case OpFamily::Geometric:
      return apply_geometric(img, as_geometric(kind), value, opts.min_box_area);
    case OpFamily::BBoxOnly: return apply_bbox_only(img, as_bbox_only(kind), value, 1.0, rng);
    case OpFamily::None: return img;
  }
  return img;
}

/// Runs the ops in order. Every op slot forks its own stream from `rng`
/// (NoOp included), so an op that does not fire leaves later slots' draws
/// unchanged.
inline AnnotatedImage apply_sub_policy(const SubPolicy& sp, const AnnotatedImage& img, Rng& rng,
                                       const ExecutionOptions& opts = {}) {
  AnnotatedImage out = img;
  for (const OpSpec& op : sp.ops) {
    Rng op_rng = rng.fork();
    const OpFamily family = op_family(op.kind);
    if (family == OpFamily::None) continue;
    if (family == OpFamily::BBoxOnly && opts.gating == BBoxOnlyGating::kPerBox) {
      const double value = has_magnitude(op.kind, opts.levels)
                               ? magnitude_from_scale(op.kind, op.magnitude, opts.levels, op_rng)
                               : 0.0;
      out = apply_bbox_only(out, as_bbox_only(op.kind), value, op.prob, op_rng);
      continue;
    }
    if (!op_rng.bernoulli(op.prob)) continue;
    const double value = has_magnitude(op.kind, opts.levels)
                             ? magnitude_from_scale(op.kind, op.magnitude, opts.levels, op_rng)
                             : 0.0;
    out = apply_op(out, op.kind, value, op_rng, opts);
  }
  return out;
}

inline std::size_t select_sub_policy(const Policy& p, Rng& rng) {
  if (p.sub_policies.empty()) throw std::invalid_argument("apply_policy: policy is empty");
  return static_cast<std::size_t>(rng.uniform_index(p.sub_policies.size()));
}

/// Picks one sub-policy uniformly and applies it.
inline AnnotatedImage apply_policy(const Policy& p, const AnnotatedImage& img, Rng& rng,
                                   const ExecutionOptions& opts = {}) {
  const std::size_t idx = select_sub_policy(p, rng);
  return apply_sub_policy(p.sub_policies[idx], img, rng, opts);
}

/// The learned 5-sub-policy COCO policy.
inline Policy builtin_coco_policy() {
  using K = OpKind;
  return Policy{{
      SubPolicy{{{K::TranslateX, 0.6, 4}, {K::Equalize, 0.8, 10}}},
      SubPolicy{{{K::BBoxOnlyTranslateY, 0.2, 2}, {K::Cutout, 0.8, 8}}},
      SubPolicy{{{K::ShearY, 1.0, 2}, {K::BBoxOnlyTranslateY, 0.6, 6}}},
      SubPolicy{{{K::Rotate, 0.6, 10}, {K::Color, 1.0, 6}}},
      SubPolicy{{{K::NoOp, 0, 0}, {K::NoOp, 0, 0}}},
  }};
}

/// Policy containing a single sub-policy of NoOps.
inline Policy noop_policy(int ops_per_sub_policy = 2) {
  return Policy{{SubPolicy{std::vector<OpSpec>(static_cast<std::size_t>(ops_per_sub_policy))}}};
}

// ---------------------------------------------------------------------------
// Policy files.

class PolicyParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw PolicyParseError("policy: " + where + ": " + what);
}
}  // namespace detail

inline std::string serialize_policy(const Policy& p) {
  std::string out = "{\n  \"version\": 1,\n  \"sub_policies\": [\n";
  for (std::size_t i = 0; i < p.sub_policies.size(); ++i) {
    out += "    [";
    const auto& ops = p.sub_policies[i].ops;
    for (std::size_t j = 0; j < ops.size(); ++j) {
      nlohmann::ordered_json o;
      o["op"] = std::string(op_name(ops[j].kind));
      o["prob"] = ops[j].prob;
      const double mag = ops[j].magnitude;
      if (mag == std::floor(mag) && std::abs(mag) < 1e15) {
        o["magnitude"] = static_cast<std::int64_t>(mag);
      } else {
        o["magnitude"] = mag;
      }
      if (j != 0) out += ", ";
      out += o.dump();
    }
    out += "]";
    out += (i + 1 < p.sub_policies.size()) ? ",\n" : "\n";
  }
  out += "  ]\n}\n";
  return out;
}

/// Parses and validates a policy document. Probabilities must sit on the
/// M-level grid; they are snapped to exact level / (M - 1). Every
/// sub-policy must have `ops_per_sub_policy` ops.
inline Policy parse_policy(std::string_view text, const LevelConfig& cfg = {},
                           int ops_per_sub_policy = 2) {
  using detail::fail;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw PolicyParseError(std::string("policy: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("document", "expected a JSON object");
  if (!doc.contains("version") || doc["version"] != 1) fail("version", "expected 1");
  if (!doc.contains("sub_policies") || !doc["sub_policies"].is_array()) {
    fail("sub_policies", "expected an array");
  }
  const auto& subs = doc["sub_policies"];
  if (subs.empty()) fail("sub_policies", "at least one sub-policy is required");

  Policy p;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const std::string sp_where = "sub_policies[" + std::to_string(i) + "]";
    if (!subs[i].is_array()) fail(sp_where, "expected an array of ops");
    if (static_cast<int>(subs[i].size()) != ops_per_sub_policy) {
      fail(sp_where, "expected " + std::to_string(ops_per_sub_policy) + " ops, got " +
                         std::to_string(subs[i].size()));
    }
    SubPolicy sp;
    for (std::size_t j = 0; j < subs[i].size(); ++j) {
      const auto& o = subs[i][j];
      const std::string where = sp_where + "[" + std::to_string(j) + "]";
      if (!o.is_object()) fail(where, "expected an object");
      if (!o.contains("op") || !o["op"].is_string()) fail(where + ".op", "expected a string");
      const auto name = o["op"].get<std::string>();
      const auto kind = op_from_name(name);
      if (!kind) fail(where + ".op", "unknown op \"" + name + "\"");

      OpSpec spec{*kind, 0, 0};
      if (o.contains("prob")) {
        if (!o["prob"].is_number()) fail(where + ".prob", "expected a number");
        const double prob = o["prob"].get<double>();
        if (!(prob >= 0.0 && prob <= 1.0)) {
          fail(where + ".prob", "value " + std::to_string(prob) + " outside [0, 1]");
        }
        const double steps = prob * (cfg.probability_levels - 1);
        if (std::abs(steps - std::round(steps)) > 1e-9) {
          fail(where + ".prob", "value " + std::to_string(prob) + " is not a multiple of 1/" +
                                    std::to_string(cfg.probability_levels - 1));
        }
        spec.prob = std::round(steps) / (cfg.probability_levels - 1);
      } else if (*kind != OpKind::NoOp) {
        fail(where + ".prob", "missing");
      }
      if (o.contains("magnitude")) {
        if (!o["magnitude"].is_number()) fail(where + ".magnitude", "expected a number");
        const double mag = o["magnitude"].get<double>();
        if (!(mag >= 0.0 && mag <= 10.0)) {
          fail(where + ".magnitude", "value " + std::to_string(mag) + " outside [0, 10]");
        }
        spec.magnitude = mag;
      } else if (*kind != OpKind::NoOp) {
        fail(where + ".magnitude", "missing");
      }
      sp.ops.push_back(spec);
    }
    p.sub_policies.push_back(std::move(sp));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Search-space size.

using BigInt = boost::multiprecision::cpp_int;

/// (num_ops * L * M)^(N * K), exactly.
inline BigInt search_space_cardinality(int num_ops, int magnitude_levels, int probability_levels,
                                       int ops_per_sub_policy, int sub_policies) {
  if (num_ops < 1 || magnitude_levels < 1 || probability_levels < 1 || ops_per_sub_policy < 1 ||
      sub_policies < 1) {
    throw std::invalid_argument("search_space_cardinality: all arguments must be >= 1");
  }
  const BigInt per_op = BigInt(num_ops) * magnitude_levels * probability_levels;
  return boost::multiprecision::pow(per_op,
                                    static_cast<unsigned>(ops_per_sub_policy * sub_policies));
}

/// "d.dd...eX" with `significant` digits, rounded half up.
inline std::string scientific_approx(const BigInt& n, int significant = 3) {
  if (n < 0) return "-" + scientific_approx(-n, significant);
  std::string digits = n.str();
  long exponent = static_cast<long>(digits.size()) - 1;
  if (static_cast<int>(digits.size()) > significant) {
    const bool round_up = digits[static_cast<std::size_t>(significant)] >= '5';
    digits.resize(static_cast<std::size_t>(significant));
    if (round_up) {
      int i = significant - 1;
      while (i >= 0 && digits[static_cast<std::size_t>(i)] == '9') digits[static_cast<std::size_t>(i--)] = '0';
      if (i < 0) {
        digits.insert(digits.begin(), '1');
        digits.pop_back();
        ++exponent;
      } else {
        ++digits[static_cast<std::size_t>(i)];
      }
    }
  }
  digits.resize(static_cast<std::size_t>(significant), '0');
  std::string out(1, digits[0]);
  if (significant > 1) out += "." + digits.substr(1);
  return out + "e" + std::to_string(exponent);
}

}  // namespace bboxaug

#endif  // BBOXAUG_POLICY_HPP_
