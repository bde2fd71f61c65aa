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

// The textual interaction protocol: instruction templates, history
// rendering, action extraction, context randomization and summaries.

#ifndef LMDECIDE_TEXTIO_HPP_
#define LMDECIDE_TEXTIO_HPP_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmdecide/common.hpp"
#include "lmdecide/env_bandit.hpp"
#include "lmdecide/env_tictactoe.hpp"

namespace lmdecide {

enum class EnvKind { kBandit, kContextual, kTicTacToe };

// One step of interaction as it appears in the agent's context.
struct Transition {
  int step = 0;
  // Board digits (tic-tac-toe) or the user description (contextual).
  std::string state;
  std::string action;
  double reward = 0.0;
  bool valid = true;
  std::string raw_text;
  // Numeric context (contextual bandits: the user's preference vector).
  VectorXd context;
};

struct Generation {
  std::string text;
  bool trainable = true;
};

struct AgentReply {
  std::string raw_text;
  std::optional<std::string> extracted_action;
  bool valid = false;
  // Per-action probabilities, when the agent exposes them (sum to 1).
  std::optional<VectorXd> action_probs;
  // Every generation behind this reply, in order.
  std::vector<Generation> generations;
};

struct Extraction {
  std::optional<std::string> action;
  bool valid = false;
};

// Finds the last `ACTION=<token>` (case-insensitive) in the text. The token
// is trimmed, lowercased, stripped of surrounding markup punctuation and must
// match a member of `action_set`. Invalidity is a value, never an exception.
Extraction ExtractAction(std::string_view raw_text,
                         std::span<const std::string> action_set);

// Builds an AgentReply for `text` against `action_set`.
AgentReply MakeReply(std::string text, std::span<const std::string> action_set);

std::string RenderHistoryLine(const Transition& t, EnvKind kind);
// One line per transition followed by "What do you predict next?".
std::string RenderHistory(std::span<const Transition> history, EnvKind kind);

inline constexpr std::string_view kHistoryHeader = "So far you have tried/seen:";
inline constexpr std::string_view kClosingQuestion = "What do you predict next?";

// ---------------------------------------------------------------------------
// Instruction templates. Placeholders are written as {name}.

std::string FillTemplate(std::string_view tmpl,
                         const std::map<std::string, std::string>& values);

std::string BanditInstructions(Scenario scenario,
                               std::span<const std::string> labels, int horizon);
std::string ContextualInstructions(std::span<const std::string> movies);
std::string TicTacToeInstructions(const Board& board, bool include_legal);
std::string UcbAgentInstructions();
std::string OutputInstructions(bool cot);
std::string SelfCorrectionMessage();

// ---------------------------------------------------------------------------

struct PromptParts {
  EnvKind kind = EnvKind::kBandit;
  std::string input_instructions;   // c_in
  std::string output_instructions;  // c_out; empty selects the cot/no-cot default
  std::vector<Transition> history;  // c_traj
  // Keep at most this many recent transitions; negative keeps all.
  int window = -1;
  // Current observation line (contextual bandits), rendered after history.
  std::string current;
};

struct PromptOptions {
  bool cot = true;
  bool legal_actions = true;
  bool summary = false;
  bool randomize = false;
  int context_budget = 1792;
};

struct LabelMapping {
  // original label -> label shown in the context
  std::map<std::string, std::string> forward;
  // shown label -> original label
  std::map<std::string, std::string> inverse;

  std::string ToShown(const std::string& original) const;
  std::string ToOriginal(const std::string& shown) const;
  bool IsIdentity() const;
};

struct RandomizedContext {
  PromptParts parts;
  LabelMapping mapping;
};

LabelMapping IdentityMapping(std::span<const std::string> action_set);
LabelMapping RandomMapping(std::span<const std::string> action_set, Rng& rng);

// Applies `mapping` to every action occurrence in the history.
PromptParts RemapHistory(const PromptParts& parts, const LabelMapping& mapping);
// Draws a fresh permutation and remaps the history.
RandomizedContext RandomizeContext(const PromptParts& parts,
                                   std::span<const std::string> action_set,
                                   Rng& rng);

// Per-action selection counts and 2-decimal mean rewards; untried actions
// are listed with count 0 and no mean.
std::string SummarizeContext(std::span<const Transition> history,
                             std::span<const std::string> action_set);

// Composes c_in, c_out, history (+ current observation), the optional
// summary and the closing question. Oldest history is dropped until the
// whitespace-token count fits `context_budget`; throws ContextOverflowError
// if it cannot fit with an empty history.
std::string BuildPrompt(const PromptParts& parts, const PromptOptions& options,
                        std::span<const std::string> action_set = {});

}  // namespace lmdecide

#endif  // LMDECIDE_TEXTIO_HPP_
