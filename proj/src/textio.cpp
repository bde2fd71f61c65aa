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

#include "lmdecide/textio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <regex>

namespace lmdecide {

namespace {

// Prompt templates. Elided parts of the instructions ("[More Instructions]")
// are not reconstructed; the task description runs straight into the output
// instructions.

constexpr std::string_view kButtonTemplate =
    "You are a bandit algorithm in a room with {k} buttons labeled {labels}. "
    "Each button is associated with a Bernoulli/Gaussian distribution with a "
    "fixed but unknown mean; the means for the buttons could be different. For "
    "either button, when you press it, you will get a reward that is sampled "
    "from the button's associated distribution. You have {horizon} time steps "
    "and, on each time step, you MUST choose one of the buttons and receive the "
    "reward. Your goal is to maximize the total reward over the {horizon} time "
    "steps.";

constexpr std::string_view kNumericTemplate =
    "You are a bandit algorithm and interact with {k} arms labeled {labels}. "
    "Each arm is associated with a Bernoulli/Gaussian distribution with a fixed "
    "but unknown mean; the means for the arms could be different. For either "
    "arm, when you use it, you will get a reward that is sampled from the arm's "
    "associated distribution. You have {horizon} time steps and, on each time "
    "step, you MUST choose one of the arms and receive the reward. Your goal is "
    "to maximize the total reward.";

constexpr std::string_view kContextualTemplate =
    "You are an AI movie recommendation assistant for a streaming platform "
    "powered by a bandit algorithm that offers a wide variety of films from "
    "different studios and genres. There are {k} unique movies you can "
    "recommend, named {labels}.\n"
    "When a user visits the streaming platform, you assess their demographic "
    "description to choose a movie to suggest.\n"
    "You aim to match the user with movies they are most likely to watch and "
    "enjoy.";

constexpr std::string_view kTicTacToeTemplate =
    "You are an agent playing tic-tac-toe.\n"
    "You observe a board with 9 entries that looks like this:\n"
    "{board}\n"
    "\n"
    "1 indicates that player 1 has placed a stone in that square.\n"
    "2 indicates that player 2 has placed a stone in that square.\n"
    "0 indicates that no stone has been placed in that square. You play as 1.\n"
    "\n"
    "There are 9 possible actions: 0, 1, 2, 3, 4, 5, 6, 7, 8. The actions "
    "correspond to the following board locations\n"
    "012\n"
    "345\n"
    "678";

constexpr std::string_view kUcbAgentTemplate =
    "Your task is to act according to the Upper-Confidence-Bound (UCB) "
    "algorithm. First, write down the UCB algorithm. Then compute the relevant "
    "UCB values for every button (approximate if necessary). Finally, select "
    "your action according to the computed quantities.\n"
    "Enclose the computed UCB values in <ucb_values> and </ucb_values> blocks, "
    "writing one label=value pair per line.";

constexpr std::string_view kCotInstructions =
    "Think step-by-step and output your final answer in the format ACTION=X "
    "where X is one of the arms listed above.\n"
    "IMPORTANT: Provide your (SHORT!) thinking process and your answer ACTION=X";

constexpr std::string_view kNoCotInstructions =
    "Output ONLY your final answer in the format ACTION=X.";

// Stand-in correction prompt.
constexpr std::string_view kSelfCorrection =
    "Wait, there might be a mistake in your previous answer. Review your "
    "reasoning and the history above, correct any errors, and output your "
    "final answer in the format ACTION=X.";

std::string NormalizeLabel(std::string_view s) { return ToLower(Trim(s)); }

std::optional<std::string> MatchLabel(const std::string& token,
                                      std::span<const std::string> action_set) {
  for (const auto& a : action_set) {
    if (NormalizeLabel(a) == token) return a;
  }
  return std::nullopt;
}

std::string FormatReward(double r, EnvKind kind) {
  if (kind == EnvKind::kTicTacToe && std::floor(r) == r && std::abs(r) < 1e6) {
    return std::to_string(static_cast<long long>(r));
  }
  return Format2(r);
}

}  // namespace

Extraction ExtractAction(std::string_view raw_text,
                         std::span<const std::string> action_set) {
  static const std::regex kPattern(R"(action\s*=\s*(\S+))", std::regex::icase);
  std::string text(raw_text);
  std::optional<std::string> last;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kPattern);
       it != std::sregex_iterator(); ++it) {
    last = (*it)[1].str();
  }
  if (!last) return {};
  std::string token = NormalizeLabel(*last);
  // Strip markup and sentence punctuation one layer at a time until the
  // token matches or nothing is left to strip.
  static constexpr std::string_view kStrip = ".,;:!?*'\"`_()[]{}<>";
  while (!token.empty()) {
    if (auto m = MatchLabel(token, action_set)) return {m, true};
    std::string stripped = token;
    while (!stripped.empty() && kStrip.find(stripped.back()) != std::string_view::npos) {
      stripped.pop_back();
      if (MatchLabel(stripped, action_set)) break;
    }
    while (!stripped.empty() && kStrip.find(stripped.front()) != std::string_view::npos) {
      stripped.erase(0, 1);
      if (MatchLabel(stripped, action_set)) break;
    }
    if (stripped == token) break;
    token = stripped;
  }
  if (auto m = MatchLabel(token, action_set)) return {m, true};
  return {std::nullopt, false};
}

AgentReply MakeReply(std::string text, std::span<const std::string> action_set) {
  AgentReply reply;
  auto ex = ExtractAction(text, action_set);
  reply.extracted_action = ex.action;
  reply.valid = ex.valid;
  reply.generations.push_back({text, true});
  reply.raw_text = std::move(text);
  return reply;
}

std::string RenderHistoryLine(const Transition& t, EnvKind kind) {
  std::string line = "Step=" + std::to_string(t.step);
  if (kind == EnvKind::kTicTacToe) {
    line += " State=" + t.state;
  } else if (kind == EnvKind::kContextual && !t.state.empty()) {
    line += " " + t.state;
  }
  line += " Action=" + t.action + " Reward=" + FormatReward(t.reward, kind);
  return line;
}

std::string RenderHistory(std::span<const Transition> history, EnvKind kind) {
  std::string out;
  for (const auto& t : history) out += RenderHistoryLine(t, kind) + "\n";
  out += kClosingQuestion;
  return out;
}

std::string FillTemplate(std::string_view tmpl,
                         const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        std::string key(tmpl.substr(i + 1, close - i - 1));
        auto it = values.find(key);
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::string BanditInstructions(Scenario scenario,
                               std::span<const std::string> labels, int horizon) {
  std::vector<std::string> copy(labels.begin(), labels.end());
  if (scenario == Scenario::kButton) {
    return FillTemplate(kButtonTemplate, {{"k", std::to_string(labels.size())},
                                          {"labels", Join(copy, ", ")},
                                          {"horizon", std::to_string(horizon)}});
  }
  return FillTemplate(kNumericTemplate, {{"k", std::to_string(labels.size())},
                                         {"labels", Join(copy, ",")},
                                         {"horizon", std::to_string(horizon)}});
}

std::string ContextualInstructions(std::span<const std::string> movies) {
  std::vector<std::string> copy(movies.begin(), movies.end());
  return FillTemplate(kContextualTemplate,
                      {{"k", std::to_string(movies.size())}, {"labels", Join(copy, ", ")}});
}

std::string TicTacToeInstructions(const Board& board, bool include_legal) {
  std::string out = FillTemplate(kTicTacToeTemplate, {{"board", RenderBoard(board, false)}});
  if (include_legal) out += "\n" + RenderLegalActions(board);
  return out;
}

std::string UcbAgentInstructions() { return std::string(kUcbAgentTemplate); }

std::string OutputInstructions(bool cot) {
  return std::string(cot ? kCotInstructions : kNoCotInstructions);
}

std::string SelfCorrectionMessage() { return std::string(kSelfCorrection); }

// ---------------------------------------------------------------------------

std::string LabelMapping::ToShown(const std::string& original) const {
  auto it = forward.find(original);
  return it == forward.end() ? original : it->second;
}

std::string LabelMapping::ToOriginal(const std::string& shown) const {
  auto it = inverse.find(shown);
  return it == inverse.end() ? shown : it->second;
}

bool LabelMapping::IsIdentity() const {
  return std::all_of(forward.begin(), forward.end(),
                     [](const auto& kv) { return kv.first == kv.second; });
}

LabelMapping IdentityMapping(std::span<const std::string> action_set) {
  LabelMapping m;
  for (const auto& a : action_set) {
    m.forward[a] = a;
    m.inverse[a] = a;
  }
  return m;
}

LabelMapping RandomMapping(std::span<const std::string> action_set, Rng& rng) {
  std::vector<std::string> shuffled(action_set.begin(), action_set.end());
  for (int i = static_cast<int>(shuffled.size()) - 1; i > 0; --i) {
    std::swap(shuffled[i], shuffled[UniformIndex(rng, i + 1)]);
  }
  LabelMapping m;
  for (std::size_t i = 0; i < action_set.size(); ++i) {
    m.forward[action_set[i]] = shuffled[i];
    m.inverse[shuffled[i]] = action_set[i];
  }
  return m;
}

PromptParts RemapHistory(const PromptParts& parts, const LabelMapping& mapping) {
  PromptParts out = parts;
  for (auto& t : out.history) t.action = mapping.ToShown(t.action);
  return out;
}

RandomizedContext RandomizeContext(const PromptParts& parts,
                                   std::span<const std::string> action_set,
                                   Rng& rng) {
  RandomizedContext rc;
  rc.mapping = RandomMapping(action_set, rng);
  rc.parts = RemapHistory(parts, rc.mapping);
  return rc;
}

std::string SummarizeContext(std::span<const Transition> history,
                             std::span<const std::string> action_set) {
  std::vector<int> counts(action_set.size(), 0);
  std::vector<double> sums(action_set.size(), 0.0);
  for (const auto& t : history) {
    for (std::size_t i = 0; i < action_set.size(); ++i) {
      if (NormalizeLabel(action_set[i]) == NormalizeLabel(t.action)) {
        ++counts[i];
        sums[i] += t.reward;
        break;
      }
    }
  }
  std::string out = "Summary of the history so far:";
  for (std::size_t i = 0; i < action_set.size(); ++i) {
    out += "\n" + action_set[i] + ": count=" + std::to_string(counts[i]);
    if (counts[i] > 0) out += " mean=" + Format2(sums[i] / counts[i]);
  }
  return out;
}

std::string BuildPrompt(const PromptParts& parts, const PromptOptions& options,
                        std::span<const std::string> action_set) {
  std::string c_out = parts.output_instructions.empty()
                          ? OutputInstructions(options.cot)
                          : parts.output_instructions;
  std::string head = parts.input_instructions + "\n\n" + c_out + "\n\n" +
                     std::string(kHistoryHeader) + "\n";
  std::string tail;
  if (!parts.current.empty()) tail += parts.current + "\n";
  if (options.summary) tail += SummarizeContext(parts.history, action_set) + "\n";
  tail += kClosingQuestion;

  const EnvKind kind = parts.kind;
  std::vector<std::string> lines;
  lines.reserve(parts.history.size());
  for (const auto& t : parts.history) lines.push_back(RenderHistoryLine(t, kind));

  std::size_t first = 0;
  if (parts.window >= 0 && lines.size() > static_cast<std::size_t>(parts.window)) {
    first = lines.size() - parts.window;
  }
  int fixed = CountTokens(head) + CountTokens(tail);
  int history_tokens = 0;
  for (std::size_t i = first; i < lines.size(); ++i) history_tokens += CountTokens(lines[i]);
  while (fixed + history_tokens > options.context_budget && first < lines.size()) {
    history_tokens -= CountTokens(lines[first]);
    ++first;
  }
  if (fixed + history_tokens > options.context_budget) {
    throw ContextOverflowError("prompt exceeds the context budget of " +
                               std::to_string(options.context_budget) +
                               " tokens even without history");
  }
  std::string out = head;
  for (std::size_t i = first; i < lines.size(); ++i) out += lines[i] + "\n";
  out += tail;
  return out;
}

}  // namespace lmdecide
