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

// Failure-mode probes: action coverage (greediness), repetition prefixes
// (frequency bias) and UCB rationale vs. action scoring (knowing-doing).

#ifndef LMDECIDE_PROBES_HPP_
#define LMDECIDE_PROBES_HPP_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmdecide/agents.hpp"
#include "lmdecide/baselines.hpp"
#include "lmdecide/episode.hpp"

namespace lmdecide {

// ---------------------------------------------------------------------------
// Coverage.

struct CoverageReport {
  int num_arms = 0;
  int instances = 0;
  // Indexed by step; entry t is measured after the (t+1)-th action.
  std::vector<double> mean_coverage;
  std::vector<double> coverage_se;
  std::vector<double> mean_regret;
  std::vector<double> regret_se;
  // Executed-action counts per arm index, summed over instances.
  std::vector<long long> histogram;
};

// Coverage after each step of one episode.
std::vector<double> CoverageCurve(std::span<const int> actions, int num_arms);

CoverageReport ProbeCoverage(Agent& agent, std::span<const BanditInstance> instances,
                             const RunOptions& options, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Frequency bias.

// Appends `reps` copies of the base history's last action, all with
// `fixed_reward`. Steps continue from the base.
std::vector<Transition> BuildRepetitionPrefix(std::span<const Transition> base,
                                              const std::string& target_action, int reps,
                                              double fixed_reward);

enum class BiasCategory { kFrequent, kGreedy, kOther };

struct FrequencyProbe {
  int target = 0;
  int base = 0;
  int reps = 0;
  double entropy = 0.0;
  int predicted = -1;
  int frequent = 0;
  int greedy = 0;
  BiasCategory category = BiasCategory::kOther;
};

struct BiasFractions {
  double frequent = 0.0;
  double greedy = 0.0;
  double other = 0.0;
  int count = 0;
};

struct FrequencyBiasReport {
  int num_arms = 0;
  std::vector<FrequencyProbe> probes;
  BiasFractions overall;
  // Repetition windows [0,10], [45,55], [90,100].
  std::vector<std::pair<int, int>> windows;
  std::vector<BiasFractions> buckets;
  int invalid = 0;
};

struct FrequencyConfig {
  std::string preset = "mab:gauss:k10:med:button";
  int targets = 5;
  int bases = 5;
  int max_reps = 100;
  int min_base = 2;
  int max_base = 10;
  DistributionMode mode = DistributionMode::kExact;
  int samples = 64;
  double temperature = 1.0;
  bool cot = true;
  int budget = 256;
  std::uint64_t seed = 0;
};

BiasCategory ClassifyAction(int action, int frequent, int greedy);
BiasFractions Fractions(std::span<const FrequencyProbe> probes);

// Uses exact distributions when the agent exposes them, otherwise samples.
FrequencyBiasReport ProbeFrequencyBias(Agent& agent, const FrequencyConfig& config);

// ---------------------------------------------------------------------------
// Knowing-doing.

enum class Knowing { kCorrect, kIncorrect, kUnparsed };
enum class Doing { kOptimal, kGreedy, kOther };

std::string_view ToString(Knowing k);
std::string_view ToString(Doing d);

// label -> value pairs of the last complete <ucb_values> block; nullopt when
// no block (or no pair for a known label) is present.
std::optional<std::map<std::string, double>> ParseUcbBlock(
    std::string_view text, std::span<const std::string> labels);

// Renders the true standard-UCB values of `history` as a block.
std::string RenderUcbBlock(const UcbState& state);

struct KnowingScore {
  Knowing knowing = Knowing::kUnparsed;
  // Either argmax set had more than one member.
  bool tie = false;
  std::map<std::string, double> parsed;
};

// Compares the argmax (over the arms listed in the block) of the parsed
// values with that of the true standard UCB values; sets intersect means
// correct.
KnowingScore ScoreKnowing(std::string_view transcript, std::span<const Transition> history,
                          std::span<const std::string> labels);

// Optimal: maximal true UCB over all arms. Greedy: maximal true UCB among
// tried arms. Optimal dominates.
Doing ScoreDoing(const std::string& chosen, std::span<const Transition> history,
                 std::span<const std::string> labels);

struct KnowingDoingReport {
  // counts[knowing][doing]
  long long counts[3][3] = {};
  long long steps = 0;
  long long invalid = 0;
  long long ties = 0;
  int failed_instances = 0;

  double CorrectFraction() const;
  // Fraction of scored steps in one cell.
  double Cell(Knowing k, Doing d) const;
  // Unparsed merged into incorrect.
  double MergedCell(bool correct, Doing d) const;
};

AgentPtr MakeUcbTranscriptAgent(bool act_greedily);

KnowingDoingReport ProbeKnowingDoing(Agent& agent, std::span<const BanditInstance> instances,
                                     int budget, std::uint64_t seed);

}  // namespace lmdecide

#endif  // LMDECIDE_PROBES_HPP_
