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

#include "lmdecide/episode.hpp"

#include <algorithm>
#include <utility>

namespace lmdecide {

BanditEnv::BanditEnv(BanditInstance instance)
    : instance_(std::move(instance)), labels_(instance_.Labels()) {}

void BanditEnv::Reset(Rng&) {
  t_ = 0;
  std::fill(instance_.pull_counts.begin(), instance_.pull_counts.end(), 0);
}

std::string BanditEnv::InputInstructions(bool) const {
  return BanditInstructions(instance_.scenario, labels_, instance_.horizon);
}

double BanditEnv::StepRegret(int action) const {
  return instance_.OptimalMean() - instance_.arms[action].mean;
}

EnvStep BanditEnv::Step(int action, Rng& rng) {
  double r = StepBandit(instance_, action, rng);
  ++t_;
  return {r, t_ >= instance_.horizon};
}

// ---------------------------------------------------------------------------

ContextualEnv::ContextualEnv(std::shared_ptr<const ContextualInstance> instance)
    : instance_(std::move(instance)) {
  if (!instance_ || instance_->users.empty()) throw ConfigError("contextual env needs users");
}

void ContextualEnv::Reset(Rng& rng) {
  t_ = 0;
  user_ = UniformIndex(rng, static_cast<int>(instance_->users.size()));
}

std::string ContextualEnv::InputInstructions(bool) const {
  return ContextualInstructions(instance_->movies);
}

std::string ContextualEnv::StateText() const { return instance_->users[user_].Describe(); }

std::string ContextualEnv::CurrentObservation(int step) const {
  return "Step=" + std::to_string(step) + " " + StateText();
}

VectorXd ContextualEnv::Context() const { return instance_->users[user_].preferences; }

double ContextualEnv::StepRegret(int action) const {
  const VectorXd& p = instance_->users[user_].preferences;
  return p.maxCoeff() - p[action];
}

EnvStep ContextualEnv::Step(int action, Rng& rng) {
  double r = StepContextual(*instance_, user_, action, rng);
  ++t_;
  user_ = UniformIndex(rng, static_cast<int>(instance_->users.size()));
  return {r, t_ >= instance_->horizon};
}

// ---------------------------------------------------------------------------

Opponent ParseOpponent(std::string_view name) {
  std::string n = ToLower(Trim(name));
  if (n == "random") return Opponent::kRandom;
  if (n == "mcts") return Opponent::kMcts;
  if (n == "mcts-noisy" || n == "mcts_noisy") return Opponent::kMctsNoisy;
  throw ConfigError("unknown opponent '" + std::string(name) + "'");
}

TicTacToeEnv::TicTacToeEnv(Opponent opponent, MctsConfig mcts, bool agent_first)
    : opponent_(opponent), mcts_(mcts), agent_first_(agent_first) {
  for (int i = 0; i < 9; ++i) labels_.push_back(std::to_string(i));
  if (opponent_ == Opponent::kMctsNoisy && mcts_.noise_p == 0.0) mcts_.noise_p = 0.5;
  if (opponent_ == Opponent::kMcts) mcts_.noise_p = 0.0;
}

std::vector<std::string> TicTacToeEnv::Legal() const {
  std::vector<std::string> out;
  for (int a : LegalActions(board_)) out.push_back(labels_[a]);
  return out;
}

void TicTacToeEnv::Reset(Rng& rng) {
  board_ = Board{};
  outcome_.reset();
  if (!agent_first_) {
    board_.to_move = Player::kOpponent;
    OpponentMove(rng);
  }
}

std::string TicTacToeEnv::InputInstructions(bool legal_in_context) const {
  return TicTacToeInstructions(board_, legal_in_context);
}

void TicTacToeEnv::OpponentMove(Rng& rng) {
  int a;
  if (opponent_ == Opponent::kRandom) {
    auto legal = LegalActions(board_);
    a = legal[UniformIndex(rng, static_cast<int>(legal.size()))];
  } else {
    a = MctsSelect(board_, mcts_, rng);
  }
  auto [next, out] = ApplyMove(board_, a);
  board_ = next;
  outcome_ = out;
}

EnvStep TicTacToeEnv::Step(int action, Rng& rng) {
  auto [next, out] = ApplyMove(board_, action);
  board_ = next;
  outcome_ = out;
  if (!outcome_) OpponentMove(rng);
  if (outcome_) return {outcome_->reward, true};
  return {0.0, false};
}

std::unique_ptr<Environment> MakeEnvironment(const EnvPreset& preset, std::uint64_t seed) {
  switch (preset.family) {
    case EnvFamily::kMab: return std::make_unique<BanditEnv>(MakeMab(preset, seed));
    case EnvFamily::kContextual: {
      auto inst = std::make_shared<const ContextualInstance>(
          MakeContextual(preset.k, 10000, 0.1, seed, preset.horizon));
      return std::make_unique<ContextualEnv>(inst);
    }
    case EnvFamily::kTicTacToe:
      return std::make_unique<TicTacToeEnv>(ParseOpponent(preset.opponent));
  }
  throw ConfigError("unknown environment family");
}

// ---------------------------------------------------------------------------

EpisodeResult RunEpisode(Environment& env, Agent& agent, const RunOptions& options,
                         Rng& env_rng, Rng& agent_rng, const StepObserver& observer) {
  env.Reset(env_rng);
  const auto& labels = env.labels();
  const int k = static_cast<int>(labels.size());
  EpisodeResult result;
  std::vector<Transition> history;
  std::vector<bool> tried(k, false);
  int tried_count = 0;
  double regret = 0.0;

  for (int step = 0; step < env.horizon(); ++step) {
    StepRecord rec;
    rec.step = step;
    LabelMapping mapping = options.prompt.randomize ? RandomMapping(labels, agent_rng)
                                                    : IdentityMapping(labels);
    PromptParts parts;
    parts.kind = env.kind();
    parts.input_instructions = options.input_instructions.empty()
                                   ? env.InputInstructions(options.prompt.legal_actions)
                                   : options.input_instructions;
    parts.history = history;
    parts.window = options.window;
    parts.current = env.CurrentObservation(step);
    if (!mapping.IsIdentity()) parts = RemapHistory(parts, mapping);

    StepContext ctx;
    ctx.kind = env.kind();
    ctx.labels = labels;
    for (const auto& l : env.Legal()) ctx.legal.push_back(mapping.ToShown(l));
    std::sort(ctx.legal.begin(), ctx.legal.end(), [&](const auto& a, const auto& b) {
      return ctx.LabelIndex(a) < ctx.LabelIndex(b);
    });
    ctx.history = parts.history;
    if (options.window >= 0 && static_cast<int>(ctx.history.size()) > options.window) {
      ctx.history.erase(ctx.history.begin(), ctx.history.end() - options.window);
    }
    ctx.step = step;
    ctx.horizon = env.horizon();
    ctx.budget = options.budget;
    ctx.temperature = options.temperature;
    ctx.board = env.board();
    ctx.context = env.Context();
    ctx.legal_in_context = options.prompt.legal_actions;
    if (options.render_prompts) {
      ctx.prompt = BuildPrompt(parts, options.prompt, labels);
      rec.prompt = ctx.prompt;
    }

    rec.legal.assign(k, false);
    for (const auto& l : ctx.legal) rec.legal[ctx.LabelIndex(l)] = true;
    rec.shown_to_env.resize(k);
    for (int i = 0; i < k; ++i) {
      rec.shown_to_env[i] = ctx.LabelIndex(mapping.ToOriginal(labels[i]));
    }
    if (options.featurize) rec.features = Featurize(ctx);

    AgentReply reply = agent.Act(ctx, agent_rng);
    if (CountTokens(reply.raw_text) > options.budget) {
      AgentReply cut = MakeReply(TruncateTokens(reply.raw_text, options.budget), ctx.ActionSet());
      reply.raw_text = std::move(cut.raw_text);
      reply.extracted_action = std::move(cut.extracted_action);
      reply.valid = cut.valid;
    }
    if (reply.extracted_action) {
      rec.generated = ctx.LabelIndex(*reply.extracted_action);
    } else if (auto any = ExtractAction(reply.raw_text, labels); any.action) {
      rec.generated = ctx.LabelIndex(*any.action);
    }
    rec.valid = reply.valid && rec.generated >= 0 && rec.legal[rec.generated];
    if (rec.valid) {
      rec.executed = rec.shown_to_env[rec.generated];
    } else {
      auto legal = env.Legal();
      const auto& pick = legal[UniformIndex(agent_rng, static_cast<int>(legal.size()))];
      rec.executed = static_cast<int>(std::find(labels.begin(), labels.end(), pick) -
                                      labels.begin());
      ++result.invalid_count;
    }
    rec.reply = std::move(reply);
    rec.shown_history = std::move(ctx.history);

    Transition tr;
    tr.step = step;
    tr.state = env.StateText();
    tr.context = env.Context();
    tr.action = labels[rec.executed];
    tr.valid = rec.valid;
    tr.raw_text = rec.reply.raw_text;
    rec.regret = env.StepRegret(rec.executed);
    EnvStep out = env.Step(rec.executed, env_rng);
    tr.reward = out.reward;
    rec.r_env = out.reward;
    rec.done = out.done;
    history.push_back(std::move(tr));

    regret += rec.regret;
    result.total_reward += out.reward;
    result.cumulative_regret.push_back(regret);
    if (!tried[rec.executed]) {
      tried[rec.executed] = true;
      ++tried_count;
    }
    result.coverage.push_back(static_cast<double>(tried_count) / k);
    if (observer) observer(rec);
    result.steps.push_back(std::move(rec));
    if (out.done) break;
  }
  result.outcome = env.outcome();
  return result;
}

}  // namespace lmdecide
