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

// Environments behind one interface and the agent-environment loop that
// renders prompts, extracts actions and applies the invalid-action fallback.

#ifndef LMDECIDE_EPISODE_HPP_
#define LMDECIDE_EPISODE_HPP_

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lmdecide/agent.hpp"
#include "lmdecide/agents.hpp"
#include "lmdecide/baselines.hpp"
#include "lmdecide/env_bandit.hpp"
#include "lmdecide/env_tictactoe.hpp"
#include "lmdecide/textio.hpp"

namespace lmdecide {

inline constexpr double kInvalidPenalty = -5.0;

struct EnvStep {
  double reward = 0.0;
  bool done = false;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual EnvKind kind() const = 0;
  virtual const std::vector<std::string>& labels() const = 0;
  // Currently legal labels.
  virtual std::vector<std::string> Legal() const { return labels(); }
  // Maximum number of agent steps per episode.
  virtual int horizon() const = 0;
  virtual void Reset(Rng& rng) = 0;
  virtual std::string InputInstructions(bool legal_in_context) const = 0;
  // State text stored in the history line of the current step.
  virtual std::string StateText() const { return {}; }
  // Observation line rendered after the history (contextual bandits).
  virtual std::string CurrentObservation(int step) const {
    (void)step;
    return {};
  }
  virtual std::optional<Board> board() const { return std::nullopt; }
  virtual VectorXd Context() const { return {}; }
  // Expected regret of `action` at the current step; 0 where undefined.
  virtual double StepRegret(int action) const {
    (void)action;
    return 0.0;
  }
  virtual EnvStep Step(int action, Rng& rng) = 0;
  virtual std::optional<GameOutcome> outcome() const { return std::nullopt; }
};

class BanditEnv final : public Environment {
 public:
  explicit BanditEnv(BanditInstance instance);
  EnvKind kind() const override { return EnvKind::kBandit; }
  const std::vector<std::string>& labels() const override { return labels_; }
  int horizon() const override { return instance_.horizon; }
  void Reset(Rng& rng) override;
  std::string InputInstructions(bool legal_in_context) const override;
  double StepRegret(int action) const override;
  EnvStep Step(int action, Rng& rng) override;
  const BanditInstance& instance() const { return instance_; }

 private:
  BanditInstance instance_;
  std::vector<std::string> labels_;
  int t_ = 0;
};

class ContextualEnv final : public Environment {
 public:
  explicit ContextualEnv(std::shared_ptr<const ContextualInstance> instance);
  EnvKind kind() const override { return EnvKind::kContextual; }
  const std::vector<std::string>& labels() const override { return instance_->movies; }
  int horizon() const override { return instance_->horizon; }
  void Reset(Rng& rng) override;
  std::string InputInstructions(bool legal_in_context) const override;
  std::string StateText() const override;
  std::string CurrentObservation(int step) const override;
  VectorXd Context() const override;
  double StepRegret(int action) const override;
  EnvStep Step(int action, Rng& rng) override;
  int user() const { return user_; }

 private:
  std::shared_ptr<const ContextualInstance> instance_;
  int user_ = 0;
  int t_ = 0;
};

enum class Opponent { kRandom, kMcts, kMctsNoisy };

Opponent ParseOpponent(std::string_view name);

class TicTacToeEnv final : public Environment {
 public:
  TicTacToeEnv(Opponent opponent, MctsConfig mcts = {}, bool agent_first = true);
  EnvKind kind() const override { return EnvKind::kTicTacToe; }
  const std::vector<std::string>& labels() const override { return labels_; }
  std::vector<std::string> Legal() const override;
  int horizon() const override { return 5; }
  void Reset(Rng& rng) override;
  std::string InputInstructions(bool legal_in_context) const override;
  std::string StateText() const override { return board_.ToString(); }
  std::optional<Board> board() const override { return board_; }
  EnvStep Step(int action, Rng& rng) override;
  std::optional<GameOutcome> outcome() const override { return outcome_; }

 private:
  void OpponentMove(Rng& rng);

  Opponent opponent_;
  MctsConfig mcts_;
  bool agent_first_;
  std::vector<std::string> labels_;
  Board board_;
  std::optional<GameOutcome> outcome_;
};

std::unique_ptr<Environment> MakeEnvironment(const EnvPreset& preset, std::uint64_t seed);

// ---------------------------------------------------------------------------

struct RunOptions {
  PromptOptions prompt;
  // Most recent transitions kept in the prompt; negative keeps all.
  int window = -1;
  // Generation budget G (whitespace tokens).
  int budget = 256;
  double temperature = 0.0;
  bool render_prompts = true;
  bool featurize = false;
  // Replaces the default c_in (e.g. the UCB-agent instructions).
  std::string input_instructions;
};

struct StepRecord {
  int step = 0;
  std::string prompt;
  AgentReply reply;
  // Index (into labels) of the generated action in the shown label space;
  // -1 when nothing parseable was generated.
  int generated = -1;
  // Index of the executed action in the environment's label space.
  int executed = 0;
  bool valid = true;
  double r_env = 0.0;
  double regret = 0.0;
  // shown index -> environment index.
  std::vector<int> shown_to_env;
  std::vector<Transition> shown_history;
  std::optional<Featurization> features;
  // Legal mask over shown indices.
  std::vector<bool> legal;
  bool done = false;
};

struct EpisodeResult {
  std::vector<StepRecord> steps;
  double total_reward = 0.0;
  std::vector<double> cumulative_regret;
  std::vector<double> coverage;
  std::optional<GameOutcome> outcome;
  int invalid_count = 0;
};

using StepObserver = std::function<void(const StepRecord&)>;

// Plays one episode. `env_rng` drives rewards and opponents; `agent_rng`
// drives the agent, label permutations and invalid-action fallbacks.
EpisodeResult RunEpisode(Environment& env, Agent& agent, const RunOptions& options,
                         Rng& env_rng, Rng& agent_rng,
                         const StepObserver& observer = nullptr);

}  // namespace lmdecide

#endif  // LMDECIDE_EPISODE_HPP_
