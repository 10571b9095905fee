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

// Detection datasets in the COCO JSON subset {images, annotations,
// categories}, plus the batch writer that applies a policy to every image.

#ifndef BBOXAUG_DATASET_HPP_
#define BBOXAUG_DATASET_HPP_

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bboxaug/geom.hpp"
#include "bboxaug/image_io.hpp"
#include "bboxaug/parallel.hpp"
#include "bboxaug/policy.hpp"
#include "bboxaug/random.hpp"
#include "bboxaug/raster.hpp"

namespace bboxaug {

struct ImageRecord {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// bbox is COCO [x, y, w, h] in pixels.
struct Annotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  int category_id = 0;
  std::array<double, 4> bbox{};

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Category {
  int id = 0;
  std::string name;

  friend bool operator==(const Category&, const Category&) = default;
};

struct Dataset {
  std::vector<ImageRecord> images;
  std::vector<Annotation> annotations;
  std::vector<Category> categories;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline BBox to_bbox(const Annotation& a) {
  return {a.bbox[0], a.bbox[1], a.bbox[0] + a.bbox[2], a.bbox[1] + a.bbox[3], a.category_id};
}

inline Annotation to_annotation(const BBox& b, std::int64_t id, std::int64_t image_id) {
  return {id, image_id, b.category_id, {b.x_min, b.y_min, b.width(), b.height()}};
}

struct ParsedDataset {
  Dataset dataset;
  int clamped_boxes = 0;  // boxes pulled back inside their image
};

/// Validates a parsed document. Dangling image ids, duplicate ids and
/// negative sizes are errors; boxes that stick out of their image are
/// clamped and counted.
inline ParsedDataset parse_dataset(const nlohmann::json& doc) {
  auto need = [](const nlohmann::json& obj, const char* key, const std::string& where) -> const nlohmann::json& {
    if (!obj.is_object() || !obj.contains(key)) throw DatasetError(where + ": missing \"" + key + "\"");
    return obj[key];
  };
  auto integer = [&](const nlohmann::json& obj, const char* key, const std::string& where) {
    const auto& v = need(obj, key, where);
    if (!v.is_number_integer()) throw DatasetError(where + ": \"" + key + "\" must be an integer");
    return v.get<std::int64_t>();
  };

  if (!doc.is_object()) throw DatasetError("dataset: expected a JSON object");
  ParsedDataset out;
  Dataset& ds = out.dataset;
  std::unordered_map<std::int64_t, std::size_t> image_index;

  const auto& images = need(doc, "images", "dataset");
  if (!images.is_array()) throw DatasetError("dataset: \"images\" must be an array");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    ImageRecord rec;
    rec.id = integer(images[i], "id", where);
    const auto& name = need(images[i], "file_name", where);
    if (!name.is_string()) throw DatasetError(where + ": \"file_name\" must be a string");
    rec.file_name = name.get<std::string>();
    rec.width = static_cast<int>(integer(images[i], "width", where));
    rec.height = static_cast<int>(integer(images[i], "height", where));
    if (rec.width < 1 || rec.height < 1) {
      throw DatasetError("image " + std::to_string(rec.id) + ": width and height must be >= 1");
    }
    if (!image_index.emplace(rec.id, ds.images.size()).second) {
      throw DatasetError("image " + std::to_string(rec.id) + ": duplicate image id");
    }
    ds.images.push_back(std::move(rec));
  }

  const auto& anns = need(doc, "annotations", "dataset");
  if (!anns.is_array()) throw DatasetError("dataset: \"annotations\" must be an array");
  std::set<std::int64_t> ann_ids;
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string where = "annotations[" + std::to_string(i) + "]";
    Annotation a;
    a.id = integer(anns[i], "id", where);
    const std::string label = "annotation " + std::to_string(a.id);
    a.image_id = integer(anns[i], "image_id", where);
    a.category_id = static_cast<int>(integer(anns[i], "category_id", where));
    const auto& box = need(anns[i], "bbox", where);
    if (!box.is_array() || box.size() != 4) throw DatasetError(label + ": bbox must be [x, y, w, h]");
    for (std::size_t k = 0; k < 4; ++k) {
      if (!box[k].is_number()) throw DatasetError(label + ": bbox entries must be numbers");
      a.bbox[k] = box[k].get<double>();
    }
    if (!ann_ids.insert(a.id).second) throw DatasetError(label + ": duplicate annotation id");
    const auto it = image_index.find(a.image_id);
    if (it == image_index.end()) {
      throw DatasetError(label + ": image_id " + std::to_string(a.image_id) + " does not exist");
    }
    if (a.bbox[2] < 0 || a.bbox[3] < 0) throw DatasetError(label + ": negative box width or height");
    const ImageRecord& img = ds.images[it->second];
    const BBox b = to_bbox(a);
    const BBox c{std::clamp(b.x_min, 0.0, double(img.width)), std::clamp(b.y_min, 0.0, double(img.height)),
                 std::clamp(b.x_max, 0.0, double(img.width)), std::clamp(b.y_max, 0.0, double(img.height)),
                 b.category_id};
    if (c != b) {
      ++out.clamped_boxes;
      a = to_annotation(c, a.id, a.image_id);
    }
    ds.annotations.push_back(a);
  }

  if (doc.contains("categories")) {
    const auto& cats = doc["categories"];
    if (!cats.is_array()) throw DatasetError("dataset: \"categories\" must be an array");
    for (std::size_t i = 0; i < cats.size(); ++i) {
      const std::string where = "categories[" + std::to_string(i) + "]";
      Category c;
      c.id = static_cast<int>(integer(cats[i], "id", where));
      if (cats[i].contains("name") && cats[i]["name"].is_string()) c.name = cats[i]["name"].get<std::string>();
      ds.categories.push_back(std::move(c));
    }
  }
  return out;
}

inline ParsedDataset load_dataset(const std::filesystem::path& annotation_path) {
  std::ifstream in(annotation_path);
  if (!in) throw DatasetError("cannot open " + annotation_path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DatasetError(annotation_path.string() + ": malformed JSON: " + e.what());
  }
  return parse_dataset(doc);
}

inline std::string serialize_dataset(const Dataset& ds) {
  nlohmann::ordered_json doc;
  doc["images"] = nlohmann::ordered_json::array();
  for (const auto& im : ds.images) {
    nlohmann::ordered_json j;
    j["id"] = im.id;
    j["file_name"] = im.file_name;
    j["width"] = im.width;
    j["height"] = im.height;
    doc["images"].push_back(std::move(j));
  }
  doc["annotations"] = nlohmann::ordered_json::array();
  for (const auto& a : ds.annotations) {
    nlohmann::ordered_json j;
    j["id"] = a.id;
    j["image_id"] = a.image_id;
    j["category_id"] = a.category_id;
    j["bbox"] = a.bbox;
    doc["annotations"].push_back(std::move(j));
  }
  doc["categories"] = nlohmann::ordered_json::array();
  for (const auto& c : ds.categories) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["name"] = c.name;
    doc["categories"].push_back(std::move(j));
  }
  return doc.dump(1) + "\n";
}

/// Boxes of `image_id`, in annotation order.
inline std::vector<BBox> boxes_for(const Dataset& ds, std::int64_t image_id) {
  std::vector<BBox> out;
  for (const auto& a : ds.annotations) {
    if (a.image_id == image_id) out.push_back(to_bbox(a));
  }
  return out;
}

/// n images drawn uniformly without replacement, with exactly their
/// annotations. Images and annotations keep their input order.
inline Dataset subset(const Dataset& ds, std::size_t n, std::uint64_t seed) {
  if (n < 1 || n > ds.images.size()) {
    throw std::invalid_argument("subset: n must be in [1, " + std::to_string(ds.images.size()) + "]");
  }
  std::vector<std::size_t> order(ds.images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(order.size() - i));
    std::swap(order[i], order[j]);
  }
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  Dataset out;
  out.categories = ds.categories;
  std::set<std::int64_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    out.images.push_back(ds.images[order[i]]);
    keep.insert(ds.images[order[i]].id);
  }
  for (const auto& a : ds.annotations) {
    if (keep.count(a.image_id)) out.annotations.push_back(a);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Baseline augmentation: horizontal flip + multi-scale jitter + crop/pad.

struct BaselineConfig {
  double flip_prob = 0.5;
  int min_short_side = 512;
  int max_short_side = 786;
  int output_size = 640;
};

struct BaselineDraw {
  bool flip = false;
  int short_side = 640;
  int crop_x = 0;  // offset into the resized image; 0 when padding
  int crop_y = 0;
};

inline AnnotatedImage flip_lr(const AnnotatedImage& img) {
  AnnotatedImage out{flip_horizontal(img.image), img.boxes};
  const double w = img.image.width();
  for (BBox& b : out.boxes) {
    const double x0 = w - b.x_max;
    const double x1 = w - b.x_min;
    b.x_min = x0;
    b.x_max = x1;
  }
  return out;
}

/// Nearest-neighbor resize so that the shorter side equals `short_side`.
inline AnnotatedImage resize_short_side(const AnnotatedImage& img, int short_side) {
  const int w = img.image.width();
  const int h = img.image.height();
  const double scale = static_cast<double>(short_side) / std::min(w, h);
  const int nw = std::max(1, static_cast<int>(std::lround(w * scale)));
  const int nh = std::max(1, static_cast<int>(std::lround(h * scale)));
  ImageBuffer out(nw, nh);
  for (int y = 0; y < nh; ++y) {
    const int sy = std::min(h - 1, static_cast<int>(std::floor((y + 0.5) * h / nh)));
    for (int x = 0; x < nw; ++x) {
      const int sx = std::min(w - 1, static_cast<int>(std::floor((x + 0.5) * w / nw)));
      out.set(x, y, img.image.at(sx, sy));
    }
  }
  AnnotatedImage res{std::move(out), {}};
  for (BBox b : img.boxes) {
    b.x_min = b.x_min * nw / w;
    b.x_max = b.x_max * nw / w;
    b.y_min = b.y_min * nh / h;
    b.y_max = b.y_max * nh / h;
    res.boxes.push_back(b);
  }
  return res;
}

/// Deterministic half of baseline_augment, given the sampled parameters.
inline AnnotatedImage baseline_transform(const AnnotatedImage& img, const BaselineDraw& draw,
                                         const BaselineConfig& cfg = {}) {
  AnnotatedImage cur = draw.flip ? flip_lr(img) : img;
  cur = resize_short_side(cur, draw.short_side);
  const int size = cfg.output_size;
  ImageBuffer canvas(size, size, kGray);
  for (int y = 0; y < size; ++y) {
    const int sy = y + draw.crop_y;
    if (sy >= cur.image.height()) break;
    for (int x = 0; x < size; ++x) {
      const int sx = x + draw.crop_x;
      if (sx >= cur.image.width()) break;
      canvas.set(x, y, cur.image.at(sx, sy));
    }
  }
  const AffineMatrix shift = AffineMatrix::translation(-draw.crop_x, -draw.crop_y);
  return {std::move(canvas), transform_boxes(cur.boxes, shift, size, size)};
}

inline BaselineDraw sample_baseline(int width, int height, Rng& rng, const BaselineConfig& cfg = {}) {
  BaselineDraw d;
  d.flip = rng.bernoulli(cfg.flip_prob);
  d.short_side = static_cast<int>(rng.uniform_int(cfg.min_short_side, cfg.max_short_side));
  const double scale = static_cast<double>(d.short_side) / std::min(width, height);
  const int nw = std::max(1, static_cast<int>(std::lround(width * scale)));
  const int nh = std::max(1, static_cast<int>(std::lround(height * scale)));
  d.crop_x = nw > cfg.output_size ? static_cast<int>(rng.uniform_int(0, nw - cfg.output_size)) : 0;
  d.crop_y = nh > cfg.output_size ? static_cast<int>(rng.uniform_int(0, nh - cfg.output_size)) : 0;
  return d;
}

/// Flip with p = 0.5, resize the short side to U{512..786}, then random-crop
/// or gray-pad to 640 x 640. Boxes follow and are clipped.
inline AnnotatedImage baseline_augment(const AnnotatedImage& img, Rng& rng, const BaselineConfig& cfg = {}) {
  return baseline_transform(img, sample_baseline(img.image.width(), img.image.height(), rng, cfg), cfg);
}

// ---------------------------------------------------------------------------
// Augmented dataset writer.

struct AugmentConfig {
  Policy policy;
  ExecutionOptions exec;
  std::uint64_t master_seed = 0;
  int passes = 1;
  int workers = 1;
  bool jpeg = false;
  int jpeg_quality = 95;
  // Called after each finished job with (done, total); may run on any worker.
  std::function<void(std::size_t, std::size_t)> progress;
};

struct AugmentError {
  std::int64_t image_id = 0;
  int pass = 0;
  std::string message;
};

struct AugmentSummary {
  Dataset output;
  std::size_t images_written = 0;
  std::size_t boxes_in = 0;
  std::size_t boxes_out = 0;
  std::vector<AugmentError> errors;

  std::size_t boxes_dropped() const { return boxes_in - boxes_out; }
};

/// Seed for one (image, pass) job. Independent of scheduling.
inline std::uint64_t job_seed(std::uint64_t master_seed, std::int64_t image_id, int pass) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(image_id), static_cast<std::uint64_t>(pass));
}

/// Applies the policy `passes` times to every image, writing
/// out_dir/images/<stem>_<pass>.png and out_dir/annotations.json. Output
/// image ids are assigned 1.. in (source image id, pass) order.
inline AugmentSummary write_augmented(const Dataset& ds, const std::filesystem::path& image_root,
                                      const std::filesystem::path& out_dir, const AugmentConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.passes < 1) throw std::invalid_argument("write_augmented: passes must be >= 1");
  const fs::path image_dir = out_dir / "images";
  fs::create_directories(image_dir);

  std::vector<std::size_t> order(ds.images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ds.images[a].id < ds.images[b].id; });

  struct Job {
    std::size_t image = 0;
    int pass = 0;
    std::size_t boxes_in = 0;
    std::vector<BBox> boxes;
    ImageRecord record;
    std::string error;
  };
  std::vector<Job> jobs;
  for (std::size_t idx : order) {
    for (int p = 0; p < cfg.passes; ++p) jobs.push_back({idx, p, 0, {}, {}, {}});
  }
  std::unordered_map<std::int64_t, std::vector<BBox>> boxes_by_image;
  for (const auto& a : ds.annotations) boxes_by_image[a.image_id].push_back(to_bbox(a));

  std::atomic<std::size_t> done{0};
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t j) {
    Job& job = jobs[j];
    const ImageRecord& src = ds.images[job.image];
    auto it = boxes_by_image.find(src.id);
    AnnotatedImage img{ImageBuffer(1, 1), it == boxes_by_image.end() ? std::vector<BBox>{} : it->second};
    job.boxes_in = img.boxes.size();
    try {
      img.image = load_image(image_root / src.file_name);
      if (img.image.width() != src.width || img.image.height() != src.height) {
        throw ImageIoError("decoded size " + std::to_string(img.image.width()) + "x" +
                           std::to_string(img.image.height()) + " differs from annotation " +
                           std::to_string(src.width) + "x" + std::to_string(src.height));
      }
      Rng rng(job_seed(cfg.master_seed, src.id, job.pass));
      AnnotatedImage out = apply_policy(cfg.policy, img, rng, cfg.exec);
      const std::string name = fs::path(src.file_name).stem().string() + "_" + std::to_string(job.pass) +
                               (cfg.jpeg ? ".jpg" : ".png");
      write_file(image_dir / name, cfg.jpeg ? encode_jpeg(out.image, cfg.jpeg_quality) : encode_png(out.image));
      job.boxes = std::move(out.boxes);
      job.record = {0, "images/" + name, out.image.width(), out.image.height()};
    } catch (const std::exception& e) {
      job.error = e.what();
    }
    if (cfg.progress) cfg.progress(done.fetch_add(1) + 1, jobs.size());
  });

  AugmentSummary summary;
  summary.output.categories = ds.categories;
  std::int64_t next_image = 1;
  std::int64_t next_ann = 1;
  for (Job& job : jobs) {
    if (!job.error.empty()) {
      summary.errors.push_back({ds.images[job.image].id, job.pass, job.error});
      continue;
    }
    job.record.id = next_image++;
    summary.output.images.push_back(job.record);
    for (const BBox& b : job.boxes) summary.output.annotations.push_back(to_annotation(b, next_ann++, job.record.id));
    ++summary.images_written;
    summary.boxes_in += job.boxes_in;
    summary.boxes_out += job.boxes.size();
  }
  std::ofstream json(out_dir / "annotations.json");
  if (!json) throw DatasetError("cannot write " + (out_dir / "annotations.json").string());
  json << serialize_dataset(summary.output);
  return summary;
}

}  // namespace bboxaug

#endif  // BBOXAUG_DATASET_HPP_
