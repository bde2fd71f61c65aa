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

// Exploration mechanisms as agent wrappers, plus the prompt-level kinds
// (randomization, summary) and the reward-level exploration bonus.

#ifndef LMDECIDE_EXPLORATION_HPP_
#define LMDECIDE_EXPLORATION_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "lmdecide/agent.hpp"

namespace lmdecide {

enum class MechanismKind {
  kTryAll,
  kEpsilonGreedy,
  kContextRandomization,
  kContextSummary,
  kSelfCorrection,
  kSelfConsistency,
  kExplorationBonus,
};

struct MechanismConfig {
  MechanismKind kind = MechanismKind::kTryAll;
  double epsilon = 0.1;
  int n_consistency = 16;
  double bonus = 1.0;

  void Validate() const;
};

std::string_view ToString(MechanismKind kind);
MechanismKind ParseMechanismKind(std::string_view name);
// Comma-separated list, outermost first, e.g. "try_all,epsilon_greedy".
std::vector<MechanismConfig> ParseMechanisms(std::string_view list, double epsilon,
                                             int n_consistency, double bonus);

std::string TryAllRationale(const std::string& label);
std::string RandomActionRationale(const std::string& label);

AgentPtr WrapTryAll(AgentPtr inner);
AgentPtr WrapEpsilonGreedy(AgentPtr inner, double epsilon);
AgentPtr WrapSelfCorrection(AgentPtr inner);
AgentPtr WrapSelfConsistency(AgentPtr inner, int n);

// Wraps with every agent-level mechanism; the first entry ends up
// outermost. Prompt- and reward-level kinds are skipped here.
AgentPtr ApplyMechanisms(AgentPtr agent, const std::vector<MechanismConfig>& mechanisms);

struct PromptOptions;
// Turns on context randomization / summary options for those kinds.
void ApplyPromptMechanisms(const std::vector<MechanismConfig>& mechanisms,
                           PromptOptions& options);
// The bonus of an exploration_bonus entry, 0 when absent.
double ExplorationBonus(const std::vector<MechanismConfig>& mechanisms);

// Per-episode record of which actions have been executed.
struct EpisodeState {
  std::vector<bool> tried;
  explicit EpisodeState(int num_actions = 0) : tried(num_actions, false) {}
};

// r + b when `action` is new to this episode; marks it tried.
double ShapeExplorationBonus(double reward, int action, EpisodeState& state, double b);

}  // namespace lmdecide

#endif  // LMDECIDE_EXPLORATION_HPP_
