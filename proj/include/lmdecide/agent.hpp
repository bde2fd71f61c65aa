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

#ifndef LMDECIDE_AGENT_HPP_
#define LMDECIDE_AGENT_HPP_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmdecide/common.hpp"
#include "lmdecide/env_tictactoe.hpp"
#include "lmdecide/textio.hpp"

namespace lmdecide {

// Everything an agent may look at when choosing an action. Text agents read
// `prompt`; structured agents read the history and observation fields. All
// labels are in the label space shown to the agent (which differs from the
// environment's under context randomization).
struct StepContext {
  EnvKind kind = EnvKind::kBandit;
  std::string prompt;
  // Full action space.
  std::vector<std::string> labels;
  // Currently valid subset of `labels` (legal moves in tic-tac-toe).
  std::vector<std::string> legal;
  std::vector<Transition> history;
  int step = 0;
  int horizon = 50;
  // Generation budget in whitespace tokens.
  int budget = 256;
  double temperature = 1.0;
  std::optional<Board> board;
  // Current numeric context (contextual bandits).
  VectorXd context;
  bool legal_in_context = true;

  // Throws UnknownActionError for labels outside the action space.
  int LabelIndex(const std::string& label) const;
  // The set replies are validated against: `legal` when set, else `labels`.
  std::span<const std::string> ActionSet() const {
    return legal.empty() ? std::span<const std::string>(labels)
                         : std::span<const std::string>(legal);
  }
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string Name() const = 0;
  virtual AgentReply Act(const StepContext& ctx, Rng& rng) = 0;
  // Exact distribution over ctx.labels, when the agent can compute one.
  virtual std::optional<VectorXd> ExactDistribution(const StepContext& ctx) const {
    (void)ctx;
    return std::nullopt;
  }
};

using AgentPtr = std::shared_ptr<Agent>;

}  // namespace lmdecide

#endif  // LMDECIDE_AGENT_HPP_
