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

// UCB expert rollouts rendered as behavior-cloning (action only) or
// thought-cloning (rationale + action) records.

#ifndef LMDECIDE_EXPERT_DATA_HPP_
#define LMDECIDE_EXPERT_DATA_HPP_

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lmdecide/baselines.hpp"
#include "lmdecide/env_bandit.hpp"
#include "lmdecide/rlft.hpp"

namespace lmdecide {

enum class RationalePhase { kTryAll, kUcb };

struct ExpertRecord {
  std::string prompt;
  std::optional<std::string> rationale;
  std::string action;
  double reward = 0.0;
  int step = 0;
  int episode = 0;
};

// "Count for action a = n, Mean = (r1 + r2) / n = m, UCB = m + sqrt(1 / n)) = v"
// or the NaN form for an untried arm. Numbers have two decimals.
std::string RenderRationaleLine(const UcbState& state, int arm);

std::string RenderUcbRationale(const UcbState& state, const std::string& selected,
                               RationalePhase phase);

struct ExpertConfig {
  std::string preset = "mab:gauss:k5:med:button";
  int n_rollouts = 1;
  bool with_cot = true;
  // Prompts dominate the file size; large runs may drop them.
  bool include_prompt = true;
  std::uint64_t seed = 0;
};

// One rollout of the unit-bonus UCB expert. Rewards are rounded to two
// decimals before they enter the UCB statistics.
std::vector<ExpertRecord> ExpertRollout(const BanditInstance& instance, int episode,
                                        const ExpertConfig& config, Rng& rng);

std::string RecordToJson(const ExpertRecord& record);
ExpertRecord RecordFromJson(const std::string& line);

struct DatasetManifest {
  std::string preset;
  std::uint64_t seed = 0;
  int n_rollouts = 0;
  long long records = 0;
  bool with_cot = false;
  std::string sha256;
};

// Streams JSONL in episode order and returns the manifest of what was written.
DatasetManifest WriteExpertDataset(const ExpertConfig& config, std::ostream& out);
// Writes `path` and the sidecar `path` + ".manifest.json".
DatasetManifest GenerateExpertDataset(const ExpertConfig& config,
                                      const std::filesystem::path& path);
std::vector<ExpertRecord> ReadExpertDataset(const std::filesystem::path& path);

std::string ManifestToJson(const DatasetManifest& manifest);

// Built-in-policy imitation data: featurized expert steps.
std::vector<SftExample> ExpertSftExamples(const ExpertConfig& config);

}  // namespace lmdecide

#endif  // LMDECIDE_EXPERT_DATA_HPP_
