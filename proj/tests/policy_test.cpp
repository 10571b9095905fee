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


#include <gtest/gtest.h>

#include "bboxaug/policy.hpp"
#include "oracles.hpp"

namespace bboxaug {
namespace {

TEST(OpNamesTest, TokenOrderAndLookup) {
  EXPECT_EQ(op_name(OpKind::Equalize), "Equalize");
  EXPECT_EQ(op_name(OpKind::BBoxOnlyTranslateY), "BBox_Only_TranslateY");
  EXPECT_EQ(op_name(OpKind::NoOp), "NoOp");
  EXPECT_EQ(op_from_name("No operation"), OpKind::NoOp);
  EXPECT_FALSE(op_from_name("Rotat").has_value());
  for (int k = 0; k < kNumKinds; ++k) {
    EXPECT_EQ(op_from_name(kOpNames[static_cast<std::size_t>(k)]), static_cast<OpKind>(k));
  }
  int color = 0, geometric = 0, bbox_only = 0;
  for (int k = 0; k < kNumSearchableKinds; ++k) {
    switch (op_family(static_cast<OpKind>(k))) {
      case OpFamily::Color: ++color; break;
      case OpFamily::Geometric: ++geometric; break;
      case OpFamily::BBoxOnly: ++bbox_only; break;
      case OpFamily::None: break;
    }
  }
  EXPECT_EQ(color, 8);
  EXPECT_EQ(geometric, 5);
  EXPECT_EQ(bbox_only, 9);
}

TEST(LevelsTest, ProbabilityAndMagnitudeGrids) {
  EXPECT_DOUBLE_EQ(probability_value(0), 0.0);
  EXPECT_DOUBLE_EQ(probability_value(3), 0.6);
  EXPECT_DOUBLE_EQ(probability_value(5), 1.0);
  EXPECT_THROW(probability_value(6), std::invalid_argument);
  EXPECT_DOUBLE_EQ(magnitude_scale(0), 0.0);
  EXPECT_DOUBLE_EQ(magnitude_scale(5), 10.0);
  EXPECT_DOUBLE_EQ(magnitude_scale(2), 4.0);
}

TEST(LevelsTest, MagnitudeValues) {
  const LevelConfig cfg;
  Rng rng(20);
  EXPECT_DOUBLE_EQ(std::abs(magnitude_value(OpKind::Rotate, 5, cfg, rng)), 30.0);
  EXPECT_DOUBLE_EQ(std::abs(magnitude_from_scale(OpKind::TranslateX, 4, cfg, rng)), 60.0);
  EXPECT_NEAR(magnitude_from_scale(OpKind::Color, 6, cfg, rng), 1.18, 1e-12);
  EXPECT_DOUBLE_EQ(magnitude_from_scale(OpKind::Solarize, 0, cfg, rng), 256.0);
  EXPECT_DOUBLE_EQ(magnitude_from_scale(OpKind::Solarize, 10, cfg, rng), 0.0);
  EXPECT_DOUBLE_EQ(magnitude_from_scale(OpKind::Cutout, 5, cfg, rng), 30.0);
  EXPECT_DOUBLE_EQ(magnitude_from_scale(OpKind::SolarizeAdd, 10, cfg, rng), 110.0);
  EXPECT_DOUBLE_EQ(std::abs(magnitude_from_scale(OpKind::ShearY, 10, cfg, rng)), 0.3);
  EXPECT_THROW(magnitude_from_scale(OpKind::Equalize, 3, cfg, rng), std::invalid_argument);
  EXPECT_THROW(magnitude_from_scale(OpKind::Rotate, 10.5, cfg, rng), std::invalid_argument);
}

TEST(LevelsTest, SymmetricSignTakesBothValues) {
  const LevelConfig cfg;
  Rng rng(21);
  int positive = 0;
  for (int i = 0; i < 1000; ++i) positive += magnitude_from_scale(OpKind::Rotate, 10, cfg, rng) > 0;
  EXPECT_GT(positive, 400);
  EXPECT_LT(positive, 600);
}

TEST(BuiltinPolicyTest, MatchesPublishedTable) {
  const Policy p = builtin_coco_policy();
  ASSERT_EQ(p.sub_policies.size(), 5u);
  using K = OpKind;
  const std::vector<std::vector<OpSpec>> expected{
      {{K::TranslateX, 0.6, 4}, {K::Equalize, 0.8, 10}},
      {{K::BBoxOnlyTranslateY, 0.2, 2}, {K::Cutout, 0.8, 8}},
      {{K::ShearY, 1.0, 2}, {K::BBoxOnlyTranslateY, 0.6, 6}},
      {{K::Rotate, 0.6, 10}, {K::Color, 1.0, 6}},
      {{K::NoOp, 0, 0}, {K::NoOp, 0, 0}},
  };
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(p.sub_policies[i].ops, expected[i]) << i;
}

TEST(SerializationTest, RoundTripIsIdentity) {
  const Policy p = builtin_coco_policy();
  const std::string text = serialize_policy(p);
  EXPECT_EQ(parse_policy(text), p);
  EXPECT_EQ(serialize_policy(parse_policy(text)), text);
}

TEST(SerializationTest, CanonicalText) {
  const Policy p{{SubPolicy{{{OpKind::Rotate, 0.6, 10}, {OpKind::NoOp, 0, 0}}}}};
  EXPECT_EQ(serialize_policy(p),
            "{\n  \"version\": 1,\n  \"sub_policies\": [\n"
            "    [{\"op\":\"Rotate\",\"prob\":0.6,\"magnitude\":10}, {\"op\":\"NoOp\",\"prob\":0.0,\"magnitude\":0}]\n"
            "  ]\n}\n");
}

TEST(SerializationTest, AcceptsNoOperationSpelling) {
  const Policy p = parse_policy(
      R"({"version":1,"sub_policies":[[{"op":"No operation"},{"op":"Equalize","prob":0.4,"magnitude":0}]]})");
  EXPECT_EQ(p.sub_policies[0].ops[0].kind, OpKind::NoOp);
  EXPECT_DOUBLE_EQ(p.sub_policies[0].ops[1].prob, 0.4);
}

std::string parse_error(const std::string& text) {
  try {
    parse_policy(text);
  } catch (const PolicyParseError& e) {
    return e.what();
  }
  return "";
}

TEST(SerializationTest, ErrorsNameTheField) {
  EXPECT_NE(parse_error(R"({"version":1,"sub_policies":[[{"op":"Rotat","prob":0.6,"magnitude":4},{"op":"NoOp"}]]})")
                .find("sub_policies[0][0].op"),
            std::string::npos);
  EXPECT_NE(parse_error(R"({"version":1,"sub_policies":[[{"op":"NoOp"},{"op":"Rotate","prob":1.3,"magnitude":4}]]})")
                .find("sub_policies[0][1].prob"),
            std::string::npos);
  EXPECT_NE(parse_error(R"({"version":1,"sub_policies":[[{"op":"NoOp"},{"op":"Rotate","prob":0.5,"magnitude":4}]]})")
                .find("multiple of 1/5"),
            std::string::npos);
  EXPECT_NE(parse_error(R"({"version":1,"sub_policies":[[{"op":"NoOp"},{"op":"Rotate","prob":0.2,"magnitude":11}]]})")
                .find("magnitude"),
            std::string::npos);
  EXPECT_NE(parse_error(R"({"version":2,"sub_policies":[]})").find("version"), std::string::npos);
  EXPECT_NE(parse_error(R"({"version":1,"sub_policies":[[{"op":"NoOp"}]]})").find("expected 2 ops"), std::string::npos);
  EXPECT_NE(parse_error("{not json").find("malformed"), std::string::npos);
}

AnnotatedImage sample_image(std::uint64_t seed) {
  Rng rng(seed);
  return {oracle::random_image(32, 24, rng), {{4, 4, 20, 16, 1}, {10, 2, 30, 22, 2}}};
}

TEST(ExecutionTest, ProbabilityZeroMatchesNoOpSeedForSeed) {
  const AnnotatedImage img = sample_image(22);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SubPolicy with_zero{{{OpKind::Rotate, 0.0, 10}, {OpKind::Cutout, 1.0, 5}}};
    const SubPolicy with_noop{{{OpKind::NoOp, 0, 0}, {OpKind::Cutout, 1.0, 5}}};
    Rng a(seed);
    Rng b(seed);
    ASSERT_EQ(apply_sub_policy(with_zero, img, a), apply_sub_policy(with_noop, img, b));
  }
}

TEST(ExecutionTest, SameSeedSameOutput) {
  const AnnotatedImage img = sample_image(23);
  const Policy p = builtin_coco_policy();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng a(seed);
    Rng b(seed);
    ASSERT_EQ(apply_policy(p, img, a), apply_policy(p, img, b));
  }
}

TEST(ExecutionTest, OutputsStayValid) {
  const AnnotatedImage img = sample_image(24);
  const Policy p = builtin_coco_policy();
  Rng rng(25);
  for (int i = 0; i < 200; ++i) {
    const AnnotatedImage out = apply_policy(p, img, rng);
    ASSERT_EQ(out.image.width(), 32);
    ASSERT_TRUE(annotations_valid(out));
  }
}

TEST(ExecutionTest, PerOpGatingTransformsAllBoxesOrNone) {
  const AnnotatedImage img = sample_image(26);
  ExecutionOptions opts;
  opts.gating = BBoxOnlyGating::kPerOp;
  const SubPolicy sp{{{OpKind::BBoxOnlyFlipLR, 0.6, 0}}};
  Rng rng(27);
  int changed = 0;
  for (int i = 0; i < 200; ++i) changed += apply_sub_policy(sp, img, rng, opts) != img;
  EXPECT_GT(changed, 90);
  EXPECT_LT(changed, 150);
}

TEST(SelectionTest, ChiSquareUniformity) {
  const Policy p = builtin_coco_policy();
  Rng rng(28);
  std::array<int, 5> counts{};
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) ++counts[select_sub_policy(p, rng)];
  double chi2 = 0;
  for (int c : counts) chi2 += (c - draws / 5.0) * (c - draws / 5.0) / (draws / 5.0);
  // 99th percentile of chi-square with 4 degrees of freedom.
  EXPECT_LT(chi2, 13.277);
}

TEST(CardinalityTest, MatchesDecimalOracle) {
  const BigInt n = search_space_cardinality(22, 6, 6, 2, 5);
  EXPECT_EQ(n.str(), oracle::pow_decimal(22 * 6 * 6, 10));
  EXPECT_EQ(n.str(), "97107285881285854916272717824");
  EXPECT_EQ(scientific_approx(n), "9.71e28");
  EXPECT_EQ(scientific_approx(BigInt(9995), 3), "1.00e4");
  EXPECT_EQ(scientific_approx(BigInt(7), 2), "7.0e0");
  EXPECT_EQ(search_space_cardinality(3, 1, 1, 1, 1), 3);
  EXPECT_THROW(search_space_cardinality(0, 6, 6, 2, 5), std::invalid_argument);
}

}  // namespace
}  // namespace bboxaug
