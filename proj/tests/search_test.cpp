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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bboxaug/search.hpp"
#include "oracles.hpp"

namespace bboxaug {
namespace {

TEST(EncodingTest, DecodeEncodeRoundTrip) {
  const SearchSpace space;
  EXPECT_EQ(space.length(), 30);
  Rng rng(30);
  for (int i = 0; i < 1000; ++i) {
    const Candidate c = random_candidate(space, rng);
    ASSERT_TRUE(is_valid(c, space));
    ASSERT_EQ(encode(decode(c, space), space), c);
  }
}

TEST(EncodingTest, RejectsNoOpAndOffGridValues) {
  EXPECT_THROW(encode(builtin_coco_policy()), std::invalid_argument);
  Policy p = decode(Candidate{std::vector<int>(30, 1)});
  p.sub_policies[0].ops[0].magnitude = 5;
  EXPECT_THROW(encode(p), std::invalid_argument);
  p.sub_policies[0].ops[0].magnitude = 4;
  p.sub_policies[0].ops[0].prob = 0.5;
  EXPECT_THROW(encode(p), std::invalid_argument);
  EXPECT_THROW(decode(Candidate{std::vector<int>(29, 0)}), std::invalid_argument);
  EXPECT_THROW(decode(Candidate{std::vector<int>(30, 6)}), std::invalid_argument);
}

TEST(MutationTest, ChangesExactlyOneTokenAndStaysValid) {
  const SearchSpace space;
  Rng rng(31);
  Candidate c = random_candidate(space, rng);
  for (int i = 0; i < 100000; ++i) {
    const Candidate m = mutate(c, space, rng);
    int diff = 0;
    for (int t = 0; t < 30; ++t) diff += m.tokens[t] != c.tokens[t];
    ASSERT_EQ(diff, 1);
    ASSERT_TRUE(is_valid(m, space));
    c = m;
  }
}

TEST(TokenMatchTest, RandomCandidateExpectation) {
  const SearchSpace space;
  Rng rng(32);
  const auto reward = token_match_reward(random_candidate(space, rng), space);
  double sum = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) sum += reward->evaluate(random_candidate(space, rng)).reward;
  const double expected = (1.0 / 22 + 1.0 / 6 + 1.0 / 6) / 3;
  EXPECT_NEAR(sum / n, expected, 0.005);
}

TEST(RandomSearchTest, BestIsMonotoneAndReachesThreshold) {
  const SearchSpace space;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng target_rng(1000 + seed);
    const auto reward = token_match_reward(random_candidate(space, target_rng), space);
    Rng rng(seed);
    const SearchResult r = random_search(*reward, space, 5000, rng);
    ASSERT_EQ(r.history.size(), 5000u);
    for (std::size_t i = 1; i < r.history.size(); ++i) {
      ASSERT_GE(r.history[i].best_so_far, r.history[i - 1].best_so_far);
    }
    EXPECT_EQ(r.history.back().best_so_far, r.best_reward);
    EXPECT_EQ(reward->evaluate(r.best).reward, r.best_reward);
    EXPECT_GE(r.best_reward, 10.0 / 30);
  }
}

TEST(EvolutionTest, ReachesNinetyPercentOnTokenMatch) {
  const SearchSpace space;
  Rng target_rng(33);
  const auto reward = token_match_reward(random_candidate(space, target_rng), space);
  Rng rng(34);
  const SearchResult r = evolution_search(*reward, space, {}, rng);
  EXPECT_EQ(r.history.size(), 5000u);
  EXPECT_GE(r.best_reward, 0.9);
  EXPECT_THROW(evolution_search(*reward, space, {8, 16, 100}, rng), std::invalid_argument);
}

Logits random_logits(const SearchSpace& space, Rng& rng, double scale) {
  Logits z = initial_controller(space).logits;
  for (auto& row : z) {
    for (double& v : row) v = scale * (2 * rng.uniform() - 1);
  }
  return z;
}

TEST(PpoGradientTest, MatchesCentralDifferences) {
  SearchSpace space;
  space.sub_policies = 2;
  space.ops_per_sub_policy = 1;
  Rng rng(35);
  int checked = 0;
  while (checked < 50) {
    const Logits old = random_logits(space, rng, 1.0);
    Logits cur = old;
    for (auto& row : cur) {
      for (double& v : row) v += 0.4 * (2 * rng.uniform() - 1);
    }
    std::vector<Candidate> actions;
    std::vector<double> adv;
    for (int i = 0; i < 8; ++i) {
      actions.push_back(sample_candidate(old, rng));
      adv.push_back(2 * rng.uniform() - 1);
    }
    const double eps = 0.2;
    // Keep every ratio away from the clip kinks.
    bool near_kink = false;
    for (std::size_t t = 0; t < cur.size(); ++t) {
      const auto p = softmax(cur[t]);
      const auto q = softmax(old[t]);
      for (const auto& a : actions) {
        const double rho = p[a.tokens[t]] / q[a.tokens[t]];
        near_kink |= std::abs(rho - 1 - eps) < 1e-3 || std::abs(rho - 1 + eps) < 1e-3;
      }
    }
    if (near_kink) continue;
    const Logits g = clipped_surrogate_gradient(cur, old, actions, adv, eps);
    double diff2 = 0;
    double norm2 = 0;
    const double h = 1e-6;
    for (std::size_t t = 0; t < cur.size(); ++t) {
      for (std::size_t k = 0; k < cur[t].size(); ++k) {
        Logits plus = cur;
        Logits minus = cur;
        plus[t][k] += h;
        minus[t][k] -= h;
        const double fd = (clipped_surrogate(plus, old, actions, adv, eps) -
                           clipped_surrogate(minus, old, actions, adv, eps)) / (2 * h);
        diff2 += (fd - g[t][k]) * (fd - g[t][k]);
        norm2 += fd * fd;
      }
    }
    if (norm2 < 1e-12) continue;
    ASSERT_LT(std::sqrt(diff2 / norm2), 1e-4) << "configuration " << checked;
    ++checked;
  }
}

TEST(PpoGradientTest, UnclippedAtOldPolicyEqualsPolicyGradient) {
  const SearchSpace space;
  Rng rng(36);
  const Logits z = random_logits(space, rng, 2.0);
  std::vector<Candidate> actions;
  std::vector<double> adv;
  for (int i = 0; i < 16; ++i) {
    actions.push_back(sample_candidate(z, rng));
    adv.push_back(rng.uniform() - 0.5);
  }
  const Logits a = clipped_surrogate_gradient(z, z, actions, adv, std::numeric_limits<double>::infinity());
  const Logits b = policy_gradient(z, actions, adv);
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t k = 0; k < a[t].size(); ++k) ASSERT_NEAR(a[t][k], b[t][k], 1e-15);
  }
}

TEST(PpoSearchTest, ZeroRewardLeavesLogitsUnchanged) {
  const SearchSpace space;
  const FunctionReward zero([](const Candidate&) { return 0.0; });
  PpoConfig cfg;
  cfg.iterations = 5;
  Rng rng(37);
  const PpoResult r = ppo_search(zero, space, cfg, rng);
  EXPECT_EQ(r.params.logits, initial_controller(space).logits);
  EXPECT_EQ(r.params.baseline, 0.0);
}

TEST(PpoSearchTest, LearnsTokenMatchTarget) {
  const SearchSpace space;
  Rng target_rng(38);
  const auto reward = token_match_reward(random_candidate(space, target_rng), space);
  Rng rng(39);
  const PpoResult r = ppo_search(*reward, space, {}, rng);
  EXPECT_EQ(r.search.history.size(), 300u * 64u);
  EXPECT_GE(r.mean_rewards.back(), 0.95);
}

TEST(PpoSearchTest, WorkerCountDoesNotChangeResults) {
  const SearchSpace space;
  Rng target_rng(40);
  const auto reward = token_match_reward(random_candidate(space, target_rng), space);
  PpoConfig cfg;
  cfg.iterations = 20;
  std::string logs[2];
  for (int i = 0; i < 2; ++i) {
    Rng rng(41);
    SearchOptions opts;
    opts.workers = i == 0 ? 1 : 4;
    std::ostringstream os;
    write_history_jsonl(os, ppo_search(*reward, space, cfg, rng, opts).search.history);
    logs[i] = os.str();
  }
  EXPECT_EQ(logs[0], logs[1]);
  EXPECT_NE(logs[0].find("\"wall_ms\":0.0"), std::string::npos);
}

TEST(RecorderTest, OutOfRangeRewardBecomesError) {
  const SearchSpace space;
  const FunctionReward bad([](const Candidate&) { return 1.5; });
  Rng rng(42);
  const SearchResult r = random_search(bad, space, 3, rng);
  for (const auto& h : r.history) {
    EXPECT_EQ(h.reward, 0.0);
    EXPECT_FALSE(h.error.empty());
  }
}

TEST(RecorderTest, RepeatsAverageStochasticRewards) {
  const SearchSpace space;
  std::atomic<int> calls{0};
  const FunctionReward alternating([&](const Candidate&) { return (calls++ % 2) ? 1.0 : 0.0; }, false);
  SearchOptions opts;
  opts.repeats = 2;
  Rng rng(43);
  const SearchResult r = random_search(alternating, space, 4, rng, opts);
  for (const auto& h : r.history) EXPECT_DOUBLE_EQ(h.reward, 0.5);
}

TEST(ExternalRewardTest, ReadsLastLine) {
  const auto reward = external_reward("cat {policy} > /dev/null; echo progress; echo 0.5");
  Rng rng(44);
  const Evaluation e = reward->evaluate(random_candidate(SearchSpace{}, rng));
  EXPECT_TRUE(e.ok()) << e.error;
  EXPECT_DOUBLE_EQ(e.reward, 0.5);
}

TEST(ExternalRewardTest, FailuresAreReportedNotThrown) {
  Rng rng(45);
  const Candidate c = random_candidate(SearchSpace{}, rng);
  EXPECT_NE(external_reward("test -f {policy} && exit 1")->evaluate(c).error.find("status 1"), std::string::npos);
  EXPECT_FALSE(external_reward("echo {policy} >/dev/null; echo abc")->evaluate(c).ok());
  EXPECT_FALSE(external_reward("echo {policy} >/dev/null; echo 2")->evaluate(c).ok());
  EXPECT_THROW(external_reward("echo 0.5"), std::invalid_argument);
}

TEST(ExternalRewardTest, StubScriptSeesPolicyFile) {
  namespace fs = std::filesystem;
  const fs::path script = fs::temp_directory_path() / "bboxaug_reward_stub.sh";
  {
    std::ofstream out(script);
    out << "#!/bin/sh\n"
           "grep -q '\"version\": 1' \"$1\" || exit 3\n"
           "n=$(grep -o '\"op\"' \"$1\" | wc -l)\n"
           "echo \"ops $n\"\n"
           "echo 0.$n\n";
  }
  fs::permissions(script, fs::perms::owner_all);
  const auto reward = external_reward(script.string() + " {policy}");
  Rng rng(46);
  const Evaluation e = reward->evaluate(random_candidate(SearchSpace{}, rng));
  EXPECT_TRUE(e.ok()) << e.error;
  EXPECT_DOUBLE_EQ(e.reward, 0.1);
  fs::remove(script);
}

}  // namespace
}  // namespace bboxaug
