// Copyright 2026 The lmdecide Authors. All rights reserved.
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

#ifndef LMDECIDE_ENV_BANDIT_HPP_
#define LMDECIDE_ENV_BANDIT_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmdecide/common.hpp"

namespace lmdecide {

enum class Scenario { kButton, kNumeric };
enum class NoiseLevel { kLow, kMedium, kHigh };
enum class ArmDistribution { kGaussian, kBernoulli };

std::string_view ToString(Scenario s);
std::string_view ToString(NoiseLevel n);

struct ArmSpec {
  std::string label;
  ArmDistribution dist = ArmDistribution::kGaussian;
  // Gaussian mean, or the success probability of a Bernoulli arm.
  double mean = 0.0;
  // Gaussian standard deviation; unused for Bernoulli arms.
  double sigma = 1.0;

  double Sample(Rng& rng) const;
};

struct BanditInstance {
  std::vector<ArmSpec> arms;
  Scenario scenario = Scenario::kButton;
  NoiseLevel noise = NoiseLevel::kMedium;
  int horizon = 50;
  std::uint64_t rng_seed = 0;
  // Per-arm pull statistics, updated by StepBandit.
  std::vector<int> pull_counts;

  int num_arms() const { return static_cast<int>(arms.size()); }
  std::vector<std::string> Labels() const;
  // Case-insensitive lookup after trim; throws UnknownActionError.
  int ArmIndex(std::string_view label) const;
  int OptimalArm() const;
  double OptimalMean() const;
};

// Fixed ordered color list; the first five are red, green, blue, yellow,
// orange and the list extends deterministically for larger k.
std::vector<std::string> ButtonLabels(int k);
std::vector<std::string> NumericLabels(int k);
std::vector<std::string> ScenarioLabels(Scenario scenario, int k);

double GaussianSigma(NoiseLevel noise);
double BernoulliGap(NoiseLevel noise);

// Means drawn i.i.d. U[0, 1] from the seeded stream; all arms share sigma.
BanditInstance MakeGaussianMab(int k, double sigma, Scenario scenario,
                               std::uint64_t seed, int horizon = 50);
// Best arm (uniformly placed) has p = 0.5 + gap / 2, the rest 0.5 - gap / 2.
BanditInstance MakeBernoulliMab(int k, double gap, Scenario scenario,
                                std::uint64_t seed, int horizon = 50);

double StepBandit(BanditInstance& instance, int arm, Rng& rng);
double StepBandit(BanditInstance& instance, std::string_view action_label,
                  Rng& rng);

// Expected regret sum_t (mu* - mu_{a_t}) over the true arm means.
double CumulativeRegret(const BanditInstance& instance,
                        std::span<const std::string> actions);
std::vector<double> RegretCurve(const BanditInstance& instance,
                                std::span<const int> actions);

// ---------------------------------------------------------------------------
// Semisynthetic contextual bandit (movie recommendation stand-in).

struct UserProfile {
  std::string gender;
  int age = 30;
  std::string profession;
  std::string location;
  VectorXd preferences;

  // "This person is a 28-year-old man, working as a administrator and live
  // in Santa Clara county, CA. The user has some numerical values ..."
  std::string Describe() const;
};

struct ContextualInstance {
  std::vector<UserProfile> users;
  std::vector<std::string> movies;
  double reward_sigma = 0.1;
  int horizon = 50;
  std::uint64_t rng_seed = 0;

  int num_arms() const { return static_cast<int>(movies.size()); }
  int MovieIndex(std::string_view label) const;
};

std::vector<std::string> MovieLabels(int k);

// Preferences ~ N(0, 0.05^2) per movie; default population of 10,000 users.
ContextualInstance MakeContextual(int k, int n_users = 10000,
                                  double reward_sigma = 0.1,
                                  std::uint64_t seed = 0, int horizon = 50);

// reward = preference[action] + N(0, reward_sigma).
double StepContextual(const ContextualInstance& instance, int user_index,
                      int action, Rng& rng);
double StepContextual(const ContextualInstance& instance, int user_index,
                      std::string_view action_label, Rng& rng);

// ---------------------------------------------------------------------------
// Presets and pools.

enum class EnvFamily { kMab, kContextual, kTicTacToe };

// String ids:
//   mab:<gauss|bern>:k<N>:<low|med|high>[:<button|numeric>]
//   cb:movielens:k<N>
//   ttt:<random|mcts|mcts-noisy>
struct EnvPreset {
  std::string id;
  EnvFamily family = EnvFamily::kMab;
  ArmDistribution dist = ArmDistribution::kGaussian;
  int k = 5;
  NoiseLevel noise = NoiseLevel::kMedium;
  Scenario scenario = Scenario::kButton;
  std::string opponent = "random";
  int horizon = 50;
};

EnvPreset ParseEnvPreset(std::string_view id);
BanditInstance MakeMab(const EnvPreset& preset, std::uint64_t seed);

struct BanditPool {
  std::string preset_id;
  std::uint64_t seed = 0;
  std::vector<BanditInstance> instances;

  int size() const { return static_cast<int>(instances.size()); }
};

// Instance i is built from SubSeed(seed, "pool/i").
BanditPool MakePool(const EnvPreset& preset, int size, std::uint64_t seed);
// Subset of distinct indices, sampled without replacement.
std::vector<int> SamplePoolSubset(int pool_size, int subset_size, Rng& rng);

void SavePool(const BanditPool& pool, const std::filesystem::path& path);
BanditPool LoadPool(const std::filesystem::path& path);

}  // namespace lmdecide

#endif  // LMDECIDE_ENV_BANDIT_HPP_
