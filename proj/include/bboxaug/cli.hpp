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

// The `bboxaug` command line: augment, preview, search, policy.
//
// Exit codes: 0 success, 1 runtime errors occurred, 2 usage or
// configuration error.

#ifndef BBOXAUG_CLI_HPP_
#define BBOXAUG_CLI_HPP_

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bboxaug/dataset.hpp"
#include "bboxaug/geom.hpp"
#include "bboxaug/image_io.hpp"
#include "bboxaug/policy.hpp"
#include "bboxaug/random.hpp"
#include "bboxaug/search.hpp"

namespace bboxaug::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

enum class LogLevel { kError, kWarn, kInfo, kDebug };

/// AUG_LOG_LEVEL in {error, warn, info, debug}; default warn.
inline LogLevel log_level_from_env() {
  const char* v = std::getenv("AUG_LOG_LEVEL");
  if (v == nullptr) return LogLevel::kWarn;
  const std::string s(v);
  if (s == "error") return LogLevel::kError;
  if (s == "info") return LogLevel::kInfo;
  if (s == "debug") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

class Logger {
 public:
  Logger(std::ostream& sink, LogLevel level) : sink_(sink), level_(level) {}

  void log(LogLevel level, const std::string& msg) {
    if (level > level_) return;
    static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
    std::lock_guard<std::mutex> lock(mu_);
    sink_ << "[" << kNames[static_cast<int>(level)] << "] " << msg << '\n';
  }
  void error(const std::string& m) { log(LogLevel::kError, m); }
  void warn(const std::string& m) { log(LogLevel::kWarn, m); }
  void info(const std::string& m) { log(LogLevel::kInfo, m); }

 private:
  std::ostream& sink_;
  LogLevel level_;
  std::mutex mu_;
};

/// Shortest round-trip decimal.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PolicySource {
  std::string path;
  bool builtin = false;
};

inline Policy load_policy(const PolicySource& src) {
  if (src.builtin) return builtin_coco_policy();
  if (src.path.empty()) throw UsageError("one of --policy or --builtin is required");
  std::ifstream in(src.path);
  if (!in) throw UsageError("cannot open policy file " + src.path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_policy(ss.str());
}

/// 2-px outline, drawn inside the box's integer extent.
inline void draw_box_outline(ImageBuffer& img, const BBox& b, Rgb color, int thickness = 2) {
  const int x0 = std::clamp(static_cast<int>(std::floor(b.x_min)), 0, img.width() - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor(b.y_min)), 0, img.height() - 1);
  const int x1 = std::clamp(static_cast<int>(std::ceil(b.x_max)) - 1, 0, img.width() - 1);
  const int y1 = std::clamp(static_cast<int>(std::ceil(b.y_max)) - 1, 0, img.height() - 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const bool edge = x - x0 < thickness || x1 - x < thickness || y - y0 < thickness || y1 - y < thickness;
      if (edge) img.set(x, y, color);
    }
  }
}

inline constexpr Rgb kOutline{0, 255, 0};

/// One row per sub-policy, `samples` independent applications per row.
/// Cell (row, col) uses seed derive_seed(seed, row, col).
inline ImageBuffer render_preview(const Policy& policy, const AnnotatedImage& src, int samples,
                                  std::uint64_t seed, const ExecutionOptions& opts = {}) {
  if (samples < 1) throw std::invalid_argument("preview: samples must be >= 1");
  if (policy.sub_policies.empty()) throw std::invalid_argument("preview: policy is empty");
  const int w = src.image.width();
  const int h = src.image.height();
  const auto rows = static_cast<int>(policy.sub_policies.size());
  ImageBuffer grid(w * samples, h * rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < samples; ++c) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c)));
      AnnotatedImage cell = apply_sub_policy(policy.sub_policies[static_cast<std::size_t>(r)], src, rng, opts);
      for (const BBox& b : cell.boxes) draw_box_outline(cell.image, b, kOutline);
      paste(grid, cell.image, c * w, r * h);
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Subcommands.

struct AugmentArgs {
  std::string annotations;
  std::string image_root;
  PolicySource policy;
  std::string out_dir;
  std::uint64_t seed = 0;
  int passes = 1;
  int workers = 1;
  bool jpeg = false;
  bool pretty = false;
  std::string gating = "per_box";
  double min_box_area = 0.0;
};

inline BBoxOnlyGating parse_gating(const std::string& s) {
  if (s == "per_box") return BBoxOnlyGating::kPerBox;
  if (s == "per_op") return BBoxOnlyGating::kPerOp;
  throw UsageError("--bbox-only-gating must be per_box or per_op");
}

inline int cmd_augment(const AugmentArgs& args, std::ostream& out, std::ostream& err) {
  namespace fs = std::filesystem;
  Logger log(err, log_level_from_env());
  Policy policy;
  ParsedDataset parsed;
  ExecutionOptions exec;
  try {
    policy = load_policy(args.policy);
    exec.gating = parse_gating(args.gating);
    exec.min_box_area = args.min_box_area;
    if (args.passes < 1) throw UsageError("--passes must be >= 1");
    if (args.workers < 1) throw UsageError("--workers must be >= 1");
    const fs::path out_dir = fs::absolute(args.out_dir);
    if (!fs::is_directory(out_dir.parent_path())) {
      throw UsageError("parent of output directory does not exist: " + out_dir.parent_path().string());
    }
    parsed = load_dataset(args.annotations);
  } catch (const std::exception& e) {
    err << "bboxaug augment: " << e.what() << '\n';
    return kExitUsage;
  }
  if (parsed.clamped_boxes > 0) log.warn(std::to_string(parsed.clamped_boxes) + " boxes clamped to image bounds");

  AugmentConfig cfg;
  cfg.policy = policy;
  cfg.exec = exec;
  cfg.master_seed = args.seed;
  cfg.passes = args.passes;
  cfg.workers = args.workers;
  cfg.jpeg = args.jpeg;
  cfg.progress = [&log](std::size_t done, std::size_t total) {
    if (done % 100 == 0 || done == total) {
      log.info("processed " + std::to_string(done) + "/" + std::to_string(total) + " images");
    }
  };
  AugmentSummary summary;
  try {
    summary = write_augmented(parsed.dataset, args.image_root, args.out_dir, cfg);
  } catch (const std::exception& e) {
    err << "bboxaug augment: " << e.what() << '\n';
    return kExitRuntime;
  }
  for (const auto& e : summary.errors) {
    log.error("image " + std::to_string(e.image_id) + " pass " + std::to_string(e.pass) + ": " + e.message);
  }
  if (args.pretty) {
    out << std::left << std::setw(16) << "images written" << summary.images_written << '\n'
        << std::setw(16) << "boxes in" << summary.boxes_in << '\n'
        << std::setw(16) << "boxes out" << summary.boxes_out << '\n'
        << std::setw(16) << "boxes dropped" << summary.boxes_dropped() << '\n'
        << std::setw(16) << "boxes clamped" << parsed.clamped_boxes << '\n'
        << std::setw(16) << "errors" << summary.errors.size() << '\n';
  } else {
    out << "images_written=" << summary.images_written << '\n'
        << "boxes_in=" << summary.boxes_in << '\n'
        << "boxes_out=" << summary.boxes_out << '\n'
        << "boxes_dropped=" << summary.boxes_dropped() << '\n'
        << "boxes_clamped=" << parsed.clamped_boxes << '\n'
        << "errors=" << summary.errors.size() << '\n';
  }
  return summary.errors.empty() ? kExitOk : kExitRuntime;
}

struct PreviewArgs {
  std::string image;
  std::string annotations;  // optional: boxes of the image with the same file name
  PolicySource policy;
  int samples = 5;
  std::uint64_t seed = 0;
  std::string out_png;
};

inline int cmd_preview(const PreviewArgs& args, std::ostream& out, std::ostream& err) {
  namespace fs = std::filesystem;
  Policy policy;
  std::optional<AnnotatedImage> src;
  try {
    policy = load_policy(args.policy);
    if (args.samples < 1) throw UsageError("--samples must be >= 1");
    src = AnnotatedImage{load_image(args.image), {}};
    if (!args.annotations.empty()) {
      const Dataset ds = load_dataset(args.annotations).dataset;
      const std::string name = fs::path(args.image).filename().string();
      for (const auto& rec : ds.images) {
        if (fs::path(rec.file_name).filename().string() == name) src->boxes = boxes_for(ds, rec.id);
      }
    }
  } catch (const std::exception& e) {
    err << "bboxaug preview: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    save_png(args.out_png, render_preview(policy, *src, args.samples, args.seed));
  } catch (const std::exception& e) {
    err << "bboxaug preview: " << e.what() << '\n';
    return kExitRuntime;
  }
  out << "rows=" << policy.sub_policies.size() << '\n' << "cols=" << args.samples << '\n';
  return kExitOk;
}

struct SearchArgs {
  std::optional<std::uint64_t> synthetic_target_seed;
  std::string command;
  std::string optimizer = "ppo";
  int budget = 300 * 64;
  std::uint64_t seed = 0;
  int population = 64;
  int sample = 16;
  int batch = 64;
  double lr = 0.05;
  double clip_eps = 0.2;
  double ema_decay = 0.9;
  int epochs = 4;
  int repeats = 1;
  int workers = 1;
  bool timing = false;
  std::string out_policy;
  std::string out_log;
};

inline int cmd_search(const SearchArgs& args, std::ostream& out, std::ostream& err) {
  const SearchSpace space;
  std::shared_ptr<RewardFunction> reward;
  try {
    if (args.synthetic_target_seed.has_value() == !args.command.empty()) {
      throw UsageError("exactly one of --synthetic or --command is required");
    }
    if (args.budget < 1) throw UsageError("--budget must be >= 1");
    if (args.synthetic_target_seed) {
      Rng target_rng(*args.synthetic_target_seed);
      reward = token_match_reward(random_candidate(space, target_rng), space);
    } else {
      reward = external_reward(args.command, space);
    }
  } catch (const std::exception& e) {
    err << "bboxaug search: " << e.what() << '\n';
    return kExitUsage;
  }

  SearchOptions opts;
  opts.workers = args.workers;
  opts.repeats = args.repeats;
  opts.record_timing = args.timing;
  Rng rng(args.seed);
  SearchResult result;
  std::optional<double> final_mean;
  try {
    if (args.optimizer == "random") {
      result = random_search(*reward, space, args.budget, rng, opts);
    } else if (args.optimizer == "evolution") {
      result = evolution_search(*reward, space, {args.population, args.sample, args.budget}, rng, opts);
    } else if (args.optimizer == "ppo") {
      PpoConfig cfg;
      cfg.batch = args.batch;
      cfg.iterations = args.budget / std::max(1, args.batch);
      cfg.lr = args.lr;
      cfg.clip_eps = args.clip_eps;
      cfg.ema_decay = args.ema_decay;
      cfg.epochs = args.epochs;
      if (cfg.iterations < 1) throw UsageError("--budget must be at least --batch for ppo");
      PpoResult r = ppo_search(*reward, space, cfg, rng, opts);
      final_mean = r.mean_rewards.back();
      result = std::move(r.search);
    } else {
      throw UsageError("unknown optimizer \"" + args.optimizer + "\"");
    }
  } catch (const UsageError& e) {
    err << "bboxaug search: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "bboxaug search: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "bboxaug search: " << e.what() << '\n';
    return kExitRuntime;
  }

  std::size_t failures = 0;
  for (const auto& h : result.history) failures += !h.error.empty();
  try {
    if (!args.out_log.empty()) {
      std::ofstream log(args.out_log);
      if (!log) throw std::runtime_error("cannot write " + args.out_log);
      write_history_jsonl(log, result.history);
    }
    if (!args.out_policy.empty()) {
      std::ofstream pol(args.out_policy);
      if (!pol) throw std::runtime_error("cannot write " + args.out_policy);
      pol << serialize_policy(decode(result.best, space));
    }
  } catch (const std::exception& e) {
    err << "bboxaug search: " << e.what() << '\n';
    return kExitRuntime;
  }
  out << "evaluations=" << result.history.size() << '\n'
      << "best_reward=" << format_double(result.best_reward) << '\n';
  if (final_mean) out << "final_mean_reward=" << format_double(*final_mean) << '\n';
  out << "evaluation_errors=" << failures << '\n';
  return failures == 0 ? kExitOk : kExitRuntime;
}

struct CardinalityArgs {
  int ops = kNumSearchableKinds;
  int magnitude_levels = 6;
  int probability_levels = 6;
  int ops_per_sub_policy = 2;
  int sub_policies = 5;
};

inline std::string cardinality_line(const CardinalityArgs& a) {
  const BigInt n = search_space_cardinality(a.ops, a.magnitude_levels, a.probability_levels,
                                            a.ops_per_sub_policy, a.sub_policies);
  return n.str() + " ≈ " + scientific_approx(n, 3);
}

// ---------------------------------------------------------------------------

inline void register_policy_source(CLI::App* cmd, PolicySource& src) {
  auto* path = cmd->add_option("--policy", src.path, "Policy JSON file");
  auto* builtin = cmd->add_flag("--builtin", src.builtin, "Use the built-in learned COCO policy");
  path->excludes(builtin);
}

/// Entry point shared by the binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Bounding-box-aware augmentation policies for object detection", "bboxaug"};
  app.require_subcommand(1);

  AugmentArgs augment;
  auto* aug = app.add_subcommand("augment", "Apply a policy to every image of a dataset");
  aug->add_option("--annotations", augment.annotations, "COCO-style annotation JSON")->required();
  aug->add_option("--image-root", augment.image_root, "Directory holding the images")->required();
  register_policy_source(aug, augment.policy);
  aug->add_option("--out", augment.out_dir, "Output directory")->required();
  aug->add_option("--seed", augment.seed, "Master seed")->capture_default_str();
  aug->add_option("--passes", augment.passes, "Augmented copies per image")->capture_default_str();
  aug->add_option("--workers", augment.workers, "Worker threads")->capture_default_str();
  aug->add_flag("--jpeg", augment.jpeg, "Write JPEG instead of PNG");
  aug->add_flag("--pretty", augment.pretty, "Human-readable summary");
  aug->add_option("--bbox-only-gating", augment.gating, "per_box or per_op")
      ->check(CLI::IsMember({"per_box", "per_op"}))
      ->capture_default_str();
  aug->add_option("--min-box-area", augment.min_box_area, "Drop transformed boxes below this area")
      ->capture_default_str();

  PreviewArgs preview;
  auto* prev = app.add_subcommand("preview", "Render sub-policy samples as a PNG grid");
  prev->add_option("--image", preview.image, "Source image (PNG or JPEG)")->required();
  prev->add_option("--annotations", preview.annotations, "Optional annotation JSON for boxes");
  register_policy_source(prev, preview.policy);
  prev->add_option("--samples", preview.samples, "Columns per sub-policy")->capture_default_str();
  prev->add_option("--seed", preview.seed, "Seed")->capture_default_str();
  prev->add_option("--out", preview.out_png, "Output PNG")->required();

  SearchArgs search;
  std::uint64_t synthetic_seed = 0;
  auto* srch = app.add_subcommand("search", "Search the policy space against a reward");
  auto* synth = srch->add_option("--synthetic", synthetic_seed, "Token-match reward; target drawn from this seed");
  auto* command = srch->add_option("--command", search.command, "Reward command; {policy} is replaced by a file path");
  synth->excludes(command);
  srch->add_option("--optimizer", search.optimizer, "random, evolution or ppo")
      ->check(CLI::IsMember({"random", "evolution", "ppo"}))
      ->capture_default_str();
  srch->add_option("--budget", search.budget, "Total reward evaluations")->capture_default_str();
  srch->add_option("--seed", search.seed, "Seed")->capture_default_str();
  srch->add_option("--population", search.population, "Evolution population")->capture_default_str();
  srch->add_option("--sample", search.sample, "Evolution tournament size")->capture_default_str();
  srch->add_option("--batch", search.batch, "PPO batch size")->capture_default_str();
  srch->add_option("--lr", search.lr, "PPO learning rate")->capture_default_str();
  srch->add_option("--clip", search.clip_eps, "PPO clip epsilon")->capture_default_str();
  srch->add_option("--ema", search.ema_decay, "PPO baseline decay")->capture_default_str();
  srch->add_option("--epochs", search.epochs, "PPO update epochs per batch")->capture_default_str();
  srch->add_option("--repeats", search.repeats, "Evaluations averaged for stochastic rewards")->capture_default_str();
  srch->add_option("--workers", search.workers, "Parallel reward evaluations")->capture_default_str();
  srch->add_flag("--timing", search.timing, "Record wall_ms in the run log");
  srch->add_option("--out-policy", search.out_policy, "Write the best policy here");
  srch->add_option("--out-log", search.out_log, "Write the line-JSON run log here");

  auto* pol = app.add_subcommand("policy", "Inspect policy files and the search space");
  pol->require_subcommand(1);
  PolicySource validate_src;
  std::string validate_path;
  auto* validate = pol->add_subcommand("validate", "Parse and check a policy file");
  validate->add_option("file", validate_path, "Policy JSON file");
  validate->add_flag("--builtin", validate_src.builtin, "Check the built-in policy");
  PolicySource show_src;
  std::string show_path;
  auto* show = pol->add_subcommand("show", "Print a policy in canonical form");
  show->add_option("file", show_path, "Policy JSON file");
  show->add_flag("--builtin", show_src.builtin, "Show the built-in policy");
  CardinalityArgs card;
  auto* cardinality = pol->add_subcommand("cardinality", "Size of the search space");
  cardinality->add_option("--ops", card.ops, "Number of operations")->capture_default_str();
  cardinality->add_option("--L", card.magnitude_levels, "Magnitude levels")->capture_default_str();
  cardinality->add_option("--M", card.probability_levels, "Probability levels")->capture_default_str();
  cardinality->add_option("--N", card.ops_per_sub_policy, "Ops per sub-policy")->capture_default_str();
  cardinality->add_option("--K", card.sub_policies, "Sub-policies per policy")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "bboxaug: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
    return kExitUsage;
  }

  if (*aug) return cmd_augment(augment, out, err);
  if (*prev) return cmd_preview(preview, out, err);
  if (*srch) {
    if (synth->count() > 0) search.synthetic_target_seed = synthetic_seed;
    return cmd_search(search, out, err);
  }
  if (*validate || *show) {
    PolicySource src = *validate ? validate_src : show_src;
    src.path = *validate ? validate_path : show_path;
    const char* name = *validate ? "validate" : "show";
    if (src.builtin == !src.path.empty()) {
      err << "bboxaug policy " << name << ": give exactly one of FILE or --builtin\n";
      return kExitUsage;
    }
    Policy p;
    try {
      p = load_policy(src);
    } catch (const std::exception& e) {
      err << "bboxaug policy " << name << ": " << e.what() << '\n';
      return kExitUsage;
    }
    if (*validate) {
      std::size_t ops = 0;
      for (const auto& sp : p.sub_policies) ops += sp.ops.size();
      out << "valid=true\nsub_policies=" << p.sub_policies.size() << "\nops=" << ops << '\n';
    } else {
      out << serialize_policy(p);
    }
    return kExitOk;
  }
  if (*cardinality) {
    try {
      out << cardinality_line(card) << '\n';
    } catch (const std::exception& e) {
      err << "bboxaug policy cardinality: " << e.what() << '\n';
      return kExitUsage;
    }
    return kExitOk;
  }
  return kExitUsage;
}

/// Convenience overload for tests: args exclude the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"bboxaug"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace bboxaug::cli

#endif  // BBOXAUG_CLI_HPP_
