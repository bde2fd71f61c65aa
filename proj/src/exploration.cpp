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

#include "lmdecide/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "lmdecide/textio.hpp"

namespace lmdecide {

void MechanismConfig::Validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must be in [0, 1]");
  if (n_consistency < 1) throw ConfigError("self-consistency needs N >= 1");
  if (!std::isfinite(bonus)) throw ConfigError("exploration bonus must be finite");
}

std::string_view ToString(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::kTryAll: return "try_all";
    case MechanismKind::kEpsilonGreedy: return "epsilon_greedy";
    case MechanismKind::kContextRandomization: return "context_randomization";
    case MechanismKind::kContextSummary: return "context_summary";
    case MechanismKind::kSelfCorrection: return "self_correction";
    case MechanismKind::kSelfConsistency: return "self_consistency";
    case MechanismKind::kExplorationBonus: return "exploration_bonus";
  }
  return "?";
}

MechanismKind ParseMechanismKind(std::string_view name) {
  std::string n = ToLower(Trim(name));
  std::replace(n.begin(), n.end(), '-', '_');
  for (auto k : {MechanismKind::kTryAll, MechanismKind::kEpsilonGreedy,
                 MechanismKind::kContextRandomization, MechanismKind::kContextSummary,
                 MechanismKind::kSelfCorrection, MechanismKind::kSelfConsistency,
                 MechanismKind::kExplorationBonus}) {
    if (n == ToString(k)) return k;
  }
  throw ConfigError("unknown mechanism '" + std::string(name) + "'");
}

std::vector<MechanismConfig> ParseMechanisms(std::string_view list, double epsilon,
                                             int n_consistency, double bonus) {
  std::vector<MechanismConfig> out;
  std::string s(list);
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    std::string part = Trim(s.substr(start, comma == std::string::npos ? std::string::npos
                                                                      : comma - start));
    if (!part.empty() && part != "none") {
      MechanismConfig m;
      m.kind = ParseMechanismKind(part);
      m.epsilon = epsilon;
      m.n_consistency = n_consistency;
      m.bonus = bonus;
      m.Validate();
      out.push_back(m);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string TryAllRationale(const std::string& label) {
  return "Action " + label + " has not been tried yet, let's explore it. ACTION=" + label;
}

std::string RandomActionRationale(const std::string& label) {
  return "Let's explore with a randomly chosen action. ACTION=" + label;
}

namespace {

std::vector<int> ActionSetIndices(const StepContext& ctx) {
  std::vector<int> out;
  for (const auto& l : ctx.ActionSet()) out.push_back(ctx.LabelIndex(l));
  return out;
}

class TryAllAgent final : public Agent {
 public:
  explicit TryAllAgent(AgentPtr inner) : inner_(std::move(inner)) {}

  std::string Name() const override { return "try_all(" + inner_->Name() + ")"; }

  AgentReply Act(const StepContext& ctx, Rng& rng) override {
    int pick = Untried(ctx);
    if (pick < 0) return inner_->Act(ctx, rng);
    return MakeReply(TryAllRationale(ctx.labels[pick]), ctx.ActionSet());
  }

  std::optional<VectorXd> ExactDistribution(const StepContext& ctx) const override {
    int pick = Untried(ctx);
    if (pick < 0) return inner_->ExactDistribution(ctx);
    VectorXd p = VectorXd::Zero(static_cast<int>(ctx.labels.size()));
    p[pick] = 1.0;
    return p;
  }

 private:
  // Lowest-index untried action during the first k steps, else -1.
  int Untried(const StepContext& ctx) const {
    const int k = static_cast<int>(ctx.labels.size());
    if (ctx.kind == EnvKind::kTicTacToe || ctx.step >= k) return -1;
    std::vector<bool> tried(k, false);
    for (const auto& tr : ctx.history) {
      auto it = std::find(ctx.labels.begin(), ctx.labels.end(), tr.action);
      if (it != ctx.labels.end()) tried[it - ctx.labels.begin()] = true;
    }
    for (int a : ActionSetIndices(ctx)) {
      if (!tried[a]) return a;
    }
    return -1;
  }

  AgentPtr inner_;
};

class EpsilonGreedyAgent final : public Agent {
 public:
  EpsilonGreedyAgent(AgentPtr inner, double epsilon)
      : inner_(std::move(inner)), epsilon_(epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must be in [0, 1]");
  }

  std::string Name() const override { return "epsilon_greedy(" + inner_->Name() + ")"; }

  AgentReply Act(const StepContext& ctx, Rng& rng) override {
    if (epsilon_ > 0.0 && Uniform01(rng) < epsilon_) {
      auto set = ctx.ActionSet();
      const auto& label = set[UniformIndex(rng, static_cast<int>(set.size()))];
      return MakeReply(RandomActionRationale(label), set);
    }
    return inner_->Act(ctx, rng);
  }

  std::optional<VectorXd> ExactDistribution(const StepContext& ctx) const override {
    auto inner = inner_->ExactDistribution(ctx);
    if (!inner) return std::nullopt;
    VectorXd p = (1.0 - epsilon_) * *inner;
    auto idx = ActionSetIndices(ctx);
    for (int a : idx) p[a] += epsilon_ / static_cast<double>(idx.size());
    return p;
  }

 private:
  AgentPtr inner_;
  double epsilon_;
};

class SelfCorrectionAgent final : public Agent {
 public:
  explicit SelfCorrectionAgent(AgentPtr inner) : inner_(std::move(inner)) {}

  std::string Name() const override { return "self_correction(" + inner_->Name() + ")"; }

  AgentReply Act(const StepContext& ctx, Rng& rng) override {
    AgentReply first = inner_->Act(ctx, rng);
    StepContext second_ctx = ctx;
    second_ctx.prompt = ctx.prompt + "\n\n" + first.raw_text + "\n\n" + SelfCorrectionMessage();
    AgentReply second = inner_->Act(second_ctx, rng);

    AgentReply out = second;
    out.generations.clear();
    for (auto g : first.generations) {
      g.trainable = false;
      out.generations.push_back(std::move(g));
    }
    for (const auto& g : second.generations) out.generations.push_back(g);
    if (!second.valid && first.valid) {
      out.extracted_action = first.extracted_action;
      out.valid = true;
      out.action_probs = first.action_probs;
    }
    return out;
  }

 private:
  AgentPtr inner_;
};

class SelfConsistencyAgent final : public Agent {
 public:
  SelfConsistencyAgent(AgentPtr inner, int n) : inner_(std::move(inner)), n_(n) {
    if (n < 1) throw ConfigError("self-consistency needs N >= 1");
  }

  std::string Name() const override {
    return "self_consistency(" + inner_->Name() + ")";
  }

  AgentReply Act(const StepContext& ctx, Rng& rng) override {
    if (n_ == 1) return inner_->Act(ctx, rng);
    StepContext hot = ctx;
    hot.temperature = 1.0;
    std::vector<AgentReply> replies;
    std::vector<int> votes(ctx.labels.size(), 0);
    for (int i = 0; i < n_; ++i) {
      replies.push_back(inner_->Act(hot, rng));
      const auto& r = replies.back();
      if (r.valid && r.extracted_action) ++votes[ctx.LabelIndex(*r.extracted_action)];
    }
    int winner = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    int chosen = 0;
    if (votes[winner] > 0) {
      for (int i = 0; i < n_; ++i) {
        const auto& r = replies[i];
        if (r.valid && r.extracted_action && *r.extracted_action == ctx.labels[winner]) {
          chosen = i;
          break;
        }
      }
    }
    AgentReply out = replies[chosen];
    out.generations.clear();
    for (int i = 0; i < n_; ++i) {
      for (auto g : replies[i].generations) {
        g.trainable = i == chosen;
        out.generations.push_back(std::move(g));
      }
    }
    return out;
  }

 private:
  AgentPtr inner_;
  int n_;
};

}  // namespace

AgentPtr WrapTryAll(AgentPtr inner) { return std::make_shared<TryAllAgent>(std::move(inner)); }

AgentPtr WrapEpsilonGreedy(AgentPtr inner, double epsilon) {
  return std::make_shared<EpsilonGreedyAgent>(std::move(inner), epsilon);
}

AgentPtr WrapSelfCorrection(AgentPtr inner) {
  return std::make_shared<SelfCorrectionAgent>(std::move(inner));
}

AgentPtr WrapSelfConsistency(AgentPtr inner, int n) {
  return std::make_shared<SelfConsistencyAgent>(std::move(inner), n);
}

AgentPtr ApplyMechanisms(AgentPtr agent, const std::vector<MechanismConfig>& mechanisms) {
  for (auto it = mechanisms.rbegin(); it != mechanisms.rend(); ++it) {
    switch (it->kind) {
      case MechanismKind::kTryAll: agent = WrapTryAll(agent); break;
      case MechanismKind::kEpsilonGreedy: agent = WrapEpsilonGreedy(agent, it->epsilon); break;
      case MechanismKind::kSelfCorrection: agent = WrapSelfCorrection(agent); break;
      case MechanismKind::kSelfConsistency:
        agent = WrapSelfConsistency(agent, it->n_consistency);
        break;
      default: break;
    }
  }
  return agent;
}

void ApplyPromptMechanisms(const std::vector<MechanismConfig>& mechanisms,
                           PromptOptions& options) {
  for (const auto& m : mechanisms) {
    if (m.kind == MechanismKind::kContextRandomization) options.randomize = true;
    if (m.kind == MechanismKind::kContextSummary) options.summary = true;
  }
}

double ExplorationBonus(const std::vector<MechanismConfig>& mechanisms) {
  for (const auto& m : mechanisms) {
    if (m.kind == MechanismKind::kExplorationBonus) return m.bonus;
  }
  return 0.0;
}

double ShapeExplorationBonus(double reward, int action, EpisodeState& state, double b) {
  if (action < 0 || action >= static_cast<int>(state.tried.size())) return reward;
  if (state.tried[action]) return reward;
  state.tried[action] = true;
  return reward + b;
}

}  // namespace lmdecide
