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

// Discrete policy search: token encoding, reward functions, and three
// optimizers (random sampling, regularized evolution, PPO over per-step
// categorical logits).

#ifndef BBOXAUG_SEARCH_HPP_
#define BBOXAUG_SEARCH_HPP_

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <sys/wait.h>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bboxaug/parallel.hpp"
#include "bboxaug/policy.hpp"
#include "bboxaug/random.hpp"

namespace bboxaug {

/// Shape of the encoded space: K sub-policies x N ops x (kind, prob, mag).
struct SearchSpace {
  int sub_policies = 5;
  int ops_per_sub_policy = 2;
  int num_kinds = kNumSearchableKinds;
  LevelConfig levels;

  int length() const { return sub_policies * ops_per_sub_policy * 3; }

  int vocab(int step) const {
    switch (step % 3) {
      case 0: return num_kinds;
      case 1: return levels.probability_levels;
      default: return levels.magnitude_levels;
    }
  }

  void validate() const {
    levels.validate();
    if (sub_policies < 1 || ops_per_sub_policy < 1) {
      throw std::invalid_argument("SearchSpace: K and N must be >= 1");
    }
    if (num_kinds < 1 || num_kinds > kNumSearchableKinds) {
      throw std::invalid_argument("SearchSpace: num_kinds must be in [1, 22]");
    }
  }
};

struct Candidate {
  std::vector<int> tokens;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

inline bool is_valid(const Candidate& c, const SearchSpace& space) {
  if (static_cast<int>(c.tokens.size()) != space.length()) return false;
  for (int t = 0; t < space.length(); ++t) {
    const int v = c.tokens[static_cast<std::size_t>(t)];
    if (v < 0 || v >= space.vocab(t)) return false;
  }
  return true;
}

inline Policy decode(const Candidate& c, const SearchSpace& space = {}) {
  if (!is_valid(c, space)) throw std::invalid_argument("decode: candidate is not valid for this space");
  Policy p;
  std::size_t t = 0;
  for (int k = 0; k < space.sub_policies; ++k) {
    SubPolicy sp;
    for (int n = 0; n < space.ops_per_sub_policy; ++n, t += 3) {
      sp.ops.push_back({static_cast<OpKind>(c.tokens[t]), probability_value(c.tokens[t + 1], space.levels),
                        magnitude_scale(c.tokens[t + 2], space.levels)});
    }
    p.sub_policies.push_back(std::move(sp));
  }
  return p;
}

inline Candidate encode(const Policy& p, const SearchSpace& space = {}) {
  if (static_cast<int>(p.sub_policies.size()) != space.sub_policies) {
    throw std::invalid_argument("encode: expected " + std::to_string(space.sub_policies) +
                                " sub-policies");
  }
  auto level_of = [](double value, double steps, const char* what) {
    const double x = value * steps;
    if (std::abs(x - std::round(x)) > 1e-9) {
      throw std::invalid_argument(std::string("encode: off-grid ") + what + " " + std::to_string(value));
    }
    return static_cast<int>(std::round(x));
  };
  Candidate c;
  for (const SubPolicy& sp : p.sub_policies) {
    if (static_cast<int>(sp.ops.size()) != space.ops_per_sub_policy) {
      throw std::invalid_argument("encode: wrong number of ops in a sub-policy");
    }
    for (const OpSpec& op : sp.ops) {
      const int kind = static_cast<int>(op.kind);
      if (op.kind == OpKind::NoOp || kind >= space.num_kinds) {
        throw std::invalid_argument("encode: " + std::string(op_name(op.kind)) +
                                    " is not in the search vocabulary");
      }
      c.tokens.push_back(kind);
      c.tokens.push_back(level_of(op.prob, space.levels.probability_levels - 1, "probability"));
      c.tokens.push_back(level_of(op.magnitude / 10.0, space.levels.magnitude_levels - 1, "magnitude"));
    }
  }
  if (!is_valid(c, space)) throw std::invalid_argument("encode: levels outside the grid");
  return c;
}

inline Candidate random_candidate(const SearchSpace& space, Rng& rng) {
  Candidate c;
  c.tokens.resize(static_cast<std::size_t>(space.length()));
  for (int t = 0; t < space.length(); ++t) {
    c.tokens[static_cast<std::size_t>(t)] =
        static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(space.vocab(t))));
  }
  return c;
}

/// Replaces one uniformly chosen token by a uniformly chosen different value.
inline Candidate mutate(const Candidate& parent, const SearchSpace& space, Rng& rng) {
  Candidate child = parent;
  const auto t = rng.uniform_index(static_cast<std::uint64_t>(space.length()));
  const int vocab = space.vocab(static_cast<int>(t));
  if (vocab < 2) return child;
  int v = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(vocab - 1)));
  if (v >= child.tokens[t]) ++v;
  child.tokens[t] = v;
  return child;
}

// ---------------------------------------------------------------------------
// Rewards.

struct Evaluation {
  double reward = 0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

/// Candidate -> reward in [0, 1]. evaluate() may be called concurrently.
class RewardFunction {
 public:
  virtual ~RewardFunction() = default;
  virtual Evaluation evaluate(const Candidate& c) const = 0;
  virtual bool deterministic() const { return true; }
};

/// Fraction of tokens equal to the target's.
class TokenMatchReward : public RewardFunction {
 public:
  TokenMatchReward(Candidate target, SearchSpace space) : target_(std::move(target)), space_(std::move(space)) {
    if (!is_valid(target_, space_)) throw std::invalid_argument("token_match_reward: invalid target");
  }

  Evaluation evaluate(const Candidate& c) const override {
    if (c.tokens.size() != target_.tokens.size()) return {0.0, "candidate length mismatch"};
    std::size_t same = 0;
    for (std::size_t i = 0; i < c.tokens.size(); ++i) same += c.tokens[i] == target_.tokens[i];
    return {static_cast<double>(same) / static_cast<double>(c.tokens.size()), {}};
  }

  const Candidate& target() const { return target_; }

 private:
  Candidate target_;
  SearchSpace space_;
};

inline std::shared_ptr<RewardFunction> token_match_reward(Candidate target, SearchSpace space = {}) {
  return std::make_shared<TokenMatchReward>(std::move(target), std::move(space));
}

/// Wraps a plain callable. Used for constant and test rewards.
class FunctionReward : public RewardFunction {
 public:
  explicit FunctionReward(std::function<double(const Candidate&)> fn, bool deterministic = true)
      : fn_(std::move(fn)), deterministic_(deterministic) {}
  Evaluation evaluate(const Candidate& c) const override { return {fn_(c), {}}; }
  bool deterministic() const override { return deterministic_; }

 private:
  std::function<double(const Candidate&)> fn_;
  bool deterministic_;
};

/// Runs a shell command per evaluation. "{policy}" in the template is
/// replaced by the path of a temporary file holding the candidate's policy
/// JSON; the reward is the decimal on the last non-empty stdout line.
class ExternalCommandReward : public RewardFunction {
 public:
  static constexpr std::string_view kPlaceholder = "{policy}";

  ExternalCommandReward(std::string command, SearchSpace space, bool deterministic = true)
      : command_(std::move(command)), space_(std::move(space)), deterministic_(deterministic) {
    if (command_.find(kPlaceholder) == std::string::npos) {
      throw std::invalid_argument("external_reward: command must contain " + std::string(kPlaceholder));
    }
  }

  Evaluation evaluate(const Candidate& c) const override {
    namespace fs = std::filesystem;
    const fs::path path =
        fs::temp_directory_path() / ("bboxaug_policy_" + std::to_string(::getpid()) + "_" +
                                     std::to_string(counter_.fetch_add(1)) + ".json");
    {
      std::ofstream out(path);
      if (!out) return {0.0, "cannot write " + path.string()};
      out << serialize_policy(decode(c, space_));
    }
    std::string cmd = command_;
    for (auto pos = cmd.find(kPlaceholder); pos != std::string::npos;
         pos = cmd.find(kPlaceholder, pos + path.string().size())) {
      cmd.replace(pos, kPlaceholder.size(), path.string());
    }
    std::string output;
    int status = -1;
    if (FILE* pipe = ::popen(cmd.c_str(), "r")) {
      char buf[4096];
      std::size_t n = 0;
      while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, n);
      status = ::pclose(pipe);
    }
    std::error_code ec;
    fs::remove(path, ec);
    if (status == -1) return {0.0, "failed to run command"};
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      return {0.0, "command exited with status " +
                       std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : status)};
    }
    return parse_reward_output(output);
  }

  bool deterministic() const override { return deterministic_; }

  static Evaluation parse_reward_output(const std::string& output) {
    std::istringstream lines(output);
    std::string line;
    std::string last;
    while (std::getline(lines, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first != std::string::npos) last = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
    }
    if (last.empty()) return {0.0, "command printed nothing"};
    char* end = nullptr;
    const double v = std::strtod(last.c_str(), &end);
    if (end == last.c_str() || *end != '\0' || !std::isfinite(v)) {
      return {0.0, "unparsable reward \"" + last + "\""};
    }
    if (v < 0.0 || v > 1.0) return {0.0, "reward " + last + " outside [0, 1]"};
    return {v, {}};
  }

 private:
  std::string command_;
  SearchSpace space_;
  bool deterministic_;
  mutable std::atomic<std::uint64_t> counter_{0};
};

inline std::shared_ptr<RewardFunction> external_reward(std::string command, SearchSpace space = {}) {
  return std::make_shared<ExternalCommandReward>(std::move(command), std::move(space));
}

// ---------------------------------------------------------------------------
// Bookkeeping shared by the optimizers.

struct SearchOptions {
  int workers = 1;            // parallel reward evaluations within a batch
  int repeats = 1;            // evaluations averaged for stochastic rewards
  bool record_timing = false; // wall_ms stays 0 unless set, keeping logs reproducible
};

struct HistoryRecord {
  std::int64_t index = 0;
  Candidate candidate;
  double reward = 0;
  double best_so_far = 0;
  double wall_ms = 0;
  std::string error;
};

struct SearchResult {
  Candidate best;
  double best_reward = 0;
  std::vector<HistoryRecord> history;
};

namespace detail {

class Recorder {
 public:
  Recorder(const RewardFunction& reward, const SearchOptions& opts, SearchResult& result)
      : reward_(reward), opts_(opts), result_(result) {}

  /// Evaluates in parallel, records in submission order, returns rewards.
  std::vector<double> evaluate(const std::vector<Candidate>& batch) {
    std::vector<HistoryRecord> records(batch.size());
    parallel_for(batch.size(), opts_.workers, [&](std::size_t i) {
      const auto start = std::chrono::steady_clock::now();
      records[i] = evaluate_one(batch[i]);
      if (opts_.record_timing) {
        records[i].wall_ms = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
      }
    });
    std::vector<double> rewards;
    rewards.reserve(batch.size());
    for (auto& r : records) {
      r.index = static_cast<std::int64_t>(result_.history.size());
      if (result_.history.empty() || r.reward > result_.best_reward) {
        result_.best_reward = r.reward;
        result_.best = r.candidate;
      }
      r.best_so_far = result_.best_reward;
      rewards.push_back(r.reward);
      result_.history.push_back(std::move(r));
    }
    return rewards;
  }

  double evaluate(const Candidate& c) { return evaluate(std::vector<Candidate>{c}).front(); }

 private:
  HistoryRecord evaluate_one(const Candidate& c) const {
    HistoryRecord rec;
    rec.candidate = c;
    const int repeats = reward_.deterministic() ? 1 : std::max(1, opts_.repeats);
    double sum = 0;
    for (int k = 0; k < repeats; ++k) {
      Evaluation e;
      try {
        e = reward_.evaluate(c);
      } catch (const std::exception& ex) {
        e = {0.0, ex.what()};
      }
      if (e.ok() && !(e.reward >= 0.0 && e.reward <= 1.0)) {
        e = {0.0, "reward " + std::to_string(e.reward) + " outside [0, 1]"};
      }
      if (!e.ok()) {
        rec.error = e.error;
        rec.reward = 0.0;
        return rec;
      }
      sum += e.reward;
    }
    rec.reward = sum / repeats;
    return rec;
  }

  const RewardFunction& reward_;
  const SearchOptions& opts_;
  SearchResult& result_;
};

}  // namespace detail

/// Uniform sampling baseline.
inline SearchResult random_search(const RewardFunction& reward, const SearchSpace& space, int budget,
                                  Rng& rng, const SearchOptions& opts = {}) {
  space.validate();
  if (budget < 1) throw std::invalid_argument("random_search: budget must be >= 1");
  SearchResult result;
  detail::Recorder recorder(reward, opts, result);
  std::vector<Candidate> batch;
  batch.reserve(static_cast<std::size_t>(budget));
  for (int i = 0; i < budget; ++i) batch.push_back(random_candidate(space, rng));
  recorder.evaluate(batch);
  return result;
}

struct EvolutionConfig {
  int population = 64;
  int sample = 16;
  int budget = 5000;
};

/// Regularized (aging) evolution: tournament of `sample` members drawn with
/// replacement, single-token mutation of the winner, oldest member evicted.
inline SearchResult evolution_search(const RewardFunction& reward, const SearchSpace& space,
                                     const EvolutionConfig& cfg, Rng& rng,
                                     const SearchOptions& opts = {}) {
  space.validate();
  if (cfg.sample < 1 || cfg.population < cfg.sample) {
    throw std::invalid_argument("evolution_search: need population >= sample >= 1");
  }
  if (cfg.budget < 1) throw std::invalid_argument("evolution_search: budget must be >= 1");
  SearchResult result;
  detail::Recorder recorder(reward, opts, result);

  std::deque<std::pair<Candidate, double>> population;
  std::vector<Candidate> initial;
  for (int i = 0; i < std::min(cfg.population, cfg.budget); ++i) {
    initial.push_back(random_candidate(space, rng));
  }
  const auto rewards = recorder.evaluate(initial);
  for (std::size_t i = 0; i < initial.size(); ++i) population.emplace_back(initial[i], rewards[i]);

  while (static_cast<int>(result.history.size()) < cfg.budget) {
    std::size_t winner = rng.uniform_index(population.size());
    for (int s = 1; s < cfg.sample; ++s) {
      const std::size_t j = rng.uniform_index(population.size());
      if (population[j].second > population[winner].second) winner = j;
    }
    Candidate child = mutate(population[winner].first, space, rng);
    const double r = recorder.evaluate(child);
    population.emplace_back(std::move(child), r);
    population.pop_front();
  }
  return result;
}

// ---------------------------------------------------------------------------
// PPO over independent per-step categoricals.

using Logits = std::vector<std::vector<double>>;

struct ControllerParams {
  Logits logits;
  double baseline = 0;
};

inline ControllerParams initial_controller(const SearchSpace& space) {
  ControllerParams p;
  for (int t = 0; t < space.length(); ++t) p.logits.emplace_back(static_cast<std::size_t>(space.vocab(t)), 0.0);
  return p;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += (p[i] = std::exp(z[i] - mx));
  for (double& v : p) v /= sum;
  return p;
}

inline Candidate sample_candidate(const Logits& logits, Rng& rng) {
  Candidate c;
  c.tokens.reserve(logits.size());
  for (const auto& z : logits) {
    const auto p = softmax(z);
    const double u = rng.uniform();
    double cdf = 0;
    int choice = static_cast<int>(p.size()) - 1;
    for (std::size_t k = 0; k < p.size(); ++k) {
      cdf += p[k];
      if (u < cdf) {
        choice = static_cast<int>(k);
        break;
      }
    }
    c.tokens.push_back(choice);
  }
  return c;
}

/// Mean over the batch of the sum over steps of
/// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A), rho = pi(a) / pi_old(a).
inline double clipped_surrogate(const Logits& current, const Logits& old,
                                const std::vector<Candidate>& actions,
                                const std::vector<double>& advantages, double clip_eps) {
  double total = 0;
  for (std::size_t t = 0; t < current.size(); ++t) {
    const auto p = softmax(current[t]);
    const auto q = softmax(old[t]);
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const auto a = static_cast<std::size_t>(actions[i].tokens[t]);
      const double rho = p[a] / q[a];
      const double A = advantages[i];
      total += std::min(rho * A, std::clamp(rho, 1.0 - clip_eps, 1.0 + clip_eps) * A);
    }
  }
  return total / static_cast<double>(actions.size());
}

/// Analytic gradient of clipped_surrogate with respect to `current`.
/// A sample contributes A * rho * (onehot(a) - pi) unless its ratio sits on
/// the clipped side of the min.
inline Logits clipped_surrogate_gradient(const Logits& current, const Logits& old,
                                         const std::vector<Candidate>& actions,
                                         const std::vector<double>& advantages, double clip_eps) {
  Logits grad(current.size());
  const double inv_batch = 1.0 / static_cast<double>(actions.size());
  for (std::size_t t = 0; t < current.size(); ++t) {
    const auto p = softmax(current[t]);
    const auto q = softmax(old[t]);
    auto& g = grad[t];
    g.assign(p.size(), 0.0);
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const auto a = static_cast<std::size_t>(actions[i].tokens[t]);
      const double A = advantages[i];
      const double rho = p[a] / q[a];
      const bool active = (A > 0 && rho < 1.0 + clip_eps) || (A < 0 && rho > 1.0 - clip_eps);
      if (!active) continue;
      const double w = A * rho * inv_batch;
      for (std::size_t k = 0; k < p.size(); ++k) g[k] -= w * p[k];
      g[a] += w;
    }
  }
  return grad;
}

/// REINFORCE gradient: mean over the batch of A * grad log pi(a).
inline Logits policy_gradient(const Logits& logits, const std::vector<Candidate>& actions,
                              const std::vector<double>& advantages) {
  Logits grad(logits.size());
  for (std::size_t t = 0; t < logits.size(); ++t) {
    const auto p = softmax(logits[t]);
    grad[t].assign(p.size(), 0.0);
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const auto a = static_cast<std::size_t>(actions[i].tokens[t]);
      const double w = advantages[i] / static_cast<double>(actions.size());
      for (std::size_t k = 0; k < p.size(); ++k) grad[t][k] -= w * p[k];
      grad[t][a] += w;
    }
  }
  return grad;
}

struct PpoConfig {
  int iterations = 300;
  int batch = 64;
  double clip_eps = 0.2;
  double lr = 0.05;
  double ema_decay = 0.9;
  int epochs = 4;
  // Adam moments for the logit update.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct PpoResult {
  SearchResult search;
  ControllerParams params;
  std::vector<double> mean_rewards;  // per iteration
};

/// Samples `batch` candidates per iteration, advantages r - baseline, takes
/// `epochs` Adam ascent steps on the clipped surrogate, then moves the EMA
/// baseline toward the batch mean.
inline PpoResult ppo_search(const RewardFunction& reward, const SearchSpace& space, const PpoConfig& cfg,
                            Rng& rng, const SearchOptions& opts = {}) {
  space.validate();
  if (cfg.batch < 2) throw std::invalid_argument("ppo_search: batch must be >= 2");
  if (!(cfg.clip_eps > 0)) throw std::invalid_argument("ppo_search: clip_eps must be > 0");
  if (cfg.iterations < 1 || cfg.epochs < 1) {
    throw std::invalid_argument("ppo_search: iterations and epochs must be >= 1");
  }
  PpoResult out;
  out.params = initial_controller(space);
  detail::Recorder recorder(reward, opts, out.search);
  Logits m1 = out.params.logits;
  Logits m2 = out.params.logits;
  long step = 0;

  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<Candidate> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch));
    for (int i = 0; i < cfg.batch; ++i) batch.push_back(sample_candidate(out.params.logits, rng));
    const auto rewards = recorder.evaluate(batch);

    double mean = 0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
    out.mean_rewards.push_back(mean);

    std::vector<double> advantages(rewards.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) advantages[i] = rewards[i] - out.params.baseline;

    const Logits old = out.params.logits;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const Logits g = clipped_surrogate_gradient(out.params.logits, old, batch, advantages, cfg.clip_eps);
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t t = 0; t < g.size(); ++t) {
        for (std::size_t k = 0; k < g[t].size(); ++k) {
          m1[t][k] = cfg.beta1 * m1[t][k] + (1 - cfg.beta1) * g[t][k];
          m2[t][k] = cfg.beta2 * m2[t][k] + (1 - cfg.beta2) * g[t][k] * g[t][k];
          double& z = out.params.logits[t][k];
          z += cfg.lr * (m1[t][k] / c1) / (std::sqrt(m2[t][k] / c2) + cfg.adam_eps);
          if (!std::isfinite(z)) {
            throw std::runtime_error("ppo_search: non-finite logit at iteration " + std::to_string(it) +
                                     ", step " + std::to_string(t) + ", token " + std::to_string(k));
          }
        }
      }
    }
    out.params.baseline = cfg.ema_decay * out.params.baseline + (1 - cfg.ema_decay) * mean;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run log: one JSON object per evaluation.

inline void write_history_jsonl(std::ostream& os, const std::vector<HistoryRecord>& history) {
  for (const auto& r : history) {
    nlohmann::ordered_json j;
    j["index"] = r.index;
    j["tokens"] = r.candidate.tokens;
    j["reward"] = r.reward;
    j["best_so_far"] = r.best_so_far;
    j["wall_ms"] = r.wall_ms;
    if (!r.error.empty()) j["error"] = r.error;
    os << j.dump() << '\n';
  }
}

}  // namespace bboxaug

#endif  // BBOXAUG_SEARCH_HPP_
