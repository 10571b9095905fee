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


// Small on-disk datasets for the dataset, CLI and acceptance tests.

#ifndef BBOXAUG_TESTS_FIXTURES_HPP_
#define BBOXAUG_TESTS_FIXTURES_HPP_

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

#include "bboxaug/bboxaug.hpp"
#include "oracles.hpp"

namespace fixture {

namespace fs = std::filesystem;

// Fresh, empty directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bboxaug_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// n random PNG images of w x h under dir/images, 1-3 boxes each, with
// dir/annotations.json in COCO layout.
inline fs::path make_dataset(const fs::path& dir, int n, int w, int h, std::uint64_t seed) {
  bboxaug::Rng rng(seed);
  bboxaug::Dataset ds;
  ds.categories = {{1, "thing"}, {2, "other"}};
  fs::create_directories(dir / "images");
  std::int64_t ann_id = 1;
  for (int i = 0; i < n; ++i) {
    const std::string name = "img" + std::to_string(i) + ".png";
    bboxaug::save_png(dir / "images" / name, oracle::random_image(w, h, rng));
    ds.images.push_back({i + 1, name, w, h});
    const int boxes = 1 + static_cast<int>(rng.uniform_index(3));
    for (int b = 0; b < boxes; ++b) {
      bboxaug::BBox box = oracle::random_box(w, h, rng);
      box.category_id = 1 + static_cast<int>(rng.uniform_index(2));
      ds.annotations.push_back(bboxaug::to_annotation(box, ann_id++, i + 1));
    }
  }
  std::ofstream(dir / "annotations.json") << bboxaug::serialize_dataset(ds);
  return dir / "annotations.json";
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> file bytes, for whole-tree comparison.
inline std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

}  // namespace fixture

#endif  // BBOXAUG_TESTS_FIXTURES_HPP_
