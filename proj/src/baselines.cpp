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

#include "lmdecide/baselines.hpp"

#include <algorithm>
#include <utility>

namespace lmdecide {

// ---------------------------------------------------------------------------
// UCB

int UcbState::Index(const std::string& label) const {
  for (int i = 0; i < num_arms(); ++i) {
    if (labels[i] == label) return i;
  }
  throw UnknownActionError("unknown arm '" + label + "'");
}

double UcbState::Mean(int arm) const {
  if (counts[arm] == 0) return std::numeric_limits<double>::quiet_NaN();
  return sums[arm] / counts[arm];
}

double UcbState::Value(int arm) const {
  if (counts[arm] == 0) return std::numeric_limits<double>::infinity();
  double n = counts[arm];
  if (variant == UcbVariant::kUnitBonus) return Mean(arm) + std::sqrt(1.0 / n);
  return Mean(arm) + c * std::sqrt(std::log(static_cast<double>(t)) / n);
}

UcbState MakeUcbState(std::span<const std::string> labels, UcbVariant variant,
                      double c) {
  if (labels.empty()) throw ConfigError("UCB needs at least one arm");
  UcbState s;
  s.labels.assign(labels.begin(), labels.end());
  s.counts.assign(labels.size(), 0);
  s.sums.assign(labels.size(), 0.0);
  s.rewards.assign(labels.size(), {});
  s.variant = variant;
  s.c = c;
  return s;
}

void UcbUpdateInPlace(UcbState& state, int arm, double reward) {
  state.counts[arm] += 1;
  state.sums[arm] += reward;
  state.rewards[arm].push_back(reward);
  state.t += 1;
}

UcbState UcbUpdate(UcbState state, const std::string& arm, double reward) {
  UcbUpdateInPlace(state, state.Index(arm), reward);
  return state;
}

int UcbSelectIndex(const UcbState& state) {
  for (int a = 0; a < state.num_arms(); ++a) {
    if (state.counts[a] == 0) return a;
  }
  int best = 0;
  double best_value = state.Value(0);
  for (int a = 1; a < state.num_arms(); ++a) {
    double v = state.Value(a);
    if (v > best_value) {
      best = a;
      best_value = v;
    }
  }
  return best;
}

std::string UcbSelect(const UcbState& state) {
  return state.labels[UcbSelectIndex(state)];
}

UcbState UcbStateFromHistory(std::span<const Transition> history,
                             std::span<const std::string> labels,
                             UcbVariant variant, double c) {
  UcbState s = MakeUcbState(labels, variant, c);
  for (const auto& tr : history) {
    auto it = std::find(s.labels.begin(), s.labels.end(), tr.action);
    if (it == s.labels.end()) continue;
    UcbUpdateInPlace(s, static_cast<int>(it - s.labels.begin()), tr.reward);
  }
  return s;
}

VectorXd LinUcbContext(const VectorXd& preferences) {
  VectorXd x(preferences.size() + 1);
  x[0] = 1.0;
  x.tail(preferences.size()) = preferences;
  return x;
}

// ---------------------------------------------------------------------------
// MCTS

namespace {

struct Node {
  Board board;
  int parent = -1;
  int action = -1;
  std::vector<int> children;
  std::vector<int> untried;
  int visits = 0;
  // Summed outcome from the view of the player who moved into this node.
  double value = 0.0;
};

int RolloutWinner(Board board, Rng& rng) {
  while (!board.IsTerminal()) {
    auto legal = LegalActions(board);
    int a = legal[UniformIndex(rng, static_cast<int>(legal.size()))];
    board.cells[a] = static_cast<std::uint8_t>(board.to_move);
    board.to_move = Other(board.to_move);
  }
  return board.Winner();
}

std::vector<Node> Search(const Board& root_board, const MctsConfig& config,
                         Rng& rng) {
  std::vector<Node> tree;
  tree.reserve(config.simulations + 1);
  tree.push_back(Node{root_board, -1, -1, {}, LegalActions(root_board)});
  for (int sim = 0; sim < config.simulations; ++sim) {
    int node = 0;
    while (tree[node].untried.empty() && !tree[node].children.empty()) {
      double log_n = std::log(static_cast<double>(tree[node].visits));
      int best = -1;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int child : tree[node].children) {
        const Node& ch = tree[child];
        double score = ch.value / ch.visits + config.uct_c * std::sqrt(log_n / ch.visits);
        if (score > best_score) {
          best_score = score;
          best = child;
        }
      }
      node = best;
    }
    if (!tree[node].untried.empty()) {
      auto& untried = tree[node].untried;
      int pick = UniformIndex(rng, static_cast<int>(untried.size()));
      int action = untried[pick];
      untried.erase(untried.begin() + pick);
      Board next = ApplyMove(tree[node].board, action).first;
      int child = static_cast<int>(tree.size());
      tree.push_back(Node{next, node, action, {}, LegalActions(next)});
      tree[node].children.push_back(child);
      node = child;
    }
    int winner = RolloutWinner(tree[node].board, rng);
    for (int n = node; n != -1; n = tree[n].parent) {
      tree[n].visits += 1;
      int mover = static_cast<int>(Other(tree[n].board.to_move));
      if (winner == mover) {
        tree[n].value += 1.0;
      } else if (winner != 0) {
        tree[n].value -= 1.0;
      }
    }
  }
  return tree;
}

void CheckMcts(const Board& board, const MctsConfig& config) {
  if (config.simulations < 1) throw ConfigError("MCTS needs simulations >= 1");
  if (!(config.noise_p >= 0.0 && config.noise_p <= 1.0)) {
    throw ConfigError("MCTS noise_p must be in [0, 1]");
  }
  if (board.IsTerminal()) throw IllegalActionError("MCTS on a terminal board");
}

}  // namespace

std::vector<int> MctsVisitCounts(const Board& board, const MctsConfig& config,
                                 Rng& rng) {
  CheckMcts(board, config);
  auto tree = Search(board, config, rng);
  std::vector<int> visits(9, 0);
  for (int child : tree[0].children) visits[tree[child].action] = tree[child].visits;
  return visits;
}

int MctsSelect(const Board& board, const MctsConfig& config, Rng& rng) {
  CheckMcts(board, config);
  if (config.noise_p > 0.0 && Uniform01(rng) < config.noise_p) {
    auto legal = LegalActions(board);
    return legal[UniformIndex(rng, static_cast<int>(legal.size()))];
  }
  auto visits = MctsVisitCounts(board, config, rng);
  return static_cast<int>(std::max_element(visits.begin(), visits.end()) - visits.begin());
}

// ---------------------------------------------------------------------------
// Agents

int ModalAction(std::span<const Transition> history,
                std::span<const std::string> labels) {
  if (history.empty()) return -1;
  std::vector<int> counts(labels.size(), 0);
  for (const auto& tr : history) {
    auto it = std::find(labels.begin(), labels.end(), tr.action);
    if (it != labels.end()) ++counts[it - labels.begin()];
  }
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

int GreedyMeanAction(std::span<const Transition> history,
                     std::span<const std::string> labels) {
  UcbState s = UcbStateFromHistory(history, labels);
  int best = -1;
  for (int a = 0; a < s.num_arms(); ++a) {
    if (s.counts[a] == 0) continue;
    if (best < 0 || s.Mean(a) > s.Mean(best)) best = a;
  }
  return best;
}

namespace {

std::vector<int> LegalIndices(const StepContext& ctx) {
  std::vector<int> out;
  if (ctx.legal.empty()) {
    for (int i = 0; i < static_cast<int>(ctx.labels.size()); ++i) out.push_back(i);
    return out;
  }
  for (const auto& l : ctx.legal) out.push_back(ctx.LabelIndex(l));
  return out;
}

VectorXd OneHot(int n, int i) {
  VectorXd v = VectorXd::Zero(n);
  v[i] = 1.0;
  return v;
}

VectorXd UniformOver(int n, const std::vector<int>& support) {
  VectorXd v = VectorXd::Zero(n);
  for (int i : support) v[i] = 1.0 / static_cast<double>(support.size());
  return v;
}

AgentReply ReplyFor(const StepContext& ctx, int index, std::string prefix = {}) {
  return MakeReply(prefix + "ACTION=" + ctx.labels[index], ctx.ActionSet());
}

class ScriptedAgent final : public Agent {
 public:
  explicit ScriptedAgent(ScriptedKind kind) : kind_(kind) {}

  std::string Name() const override {
    switch (kind_) {
      case ScriptedKind::kCopycat: return "copycat";
      case ScriptedKind::kGreedyMean: return "greedy";
      case ScriptedKind::kUniformRandom: return "random";
    }
    return "scripted";
  }

  AgentReply Act(const StepContext& ctx, Rng& rng) override {
    int pick = Deterministic(ctx);
    if (pick < 0) {
      auto legal = LegalIndices(ctx);
      pick = legal[UniformIndex(rng, static_cast<int>(legal.size()))];
    }
    return ReplyFor(ctx, pick);
  }

  std::optional<VectorXd> ExactDistribution(const StepContext& ctx) const override {
    int n = static_cast<int>(ctx.labels.size());
    int pick = Deterministic(ctx);
    if (pick >= 0) return OneHot(n, pick);
    return UniformOver(n, LegalIndices(ctx));
  }

 private:
  int Deterministic(const StepContext& ctx) const {
    switch (kind_) {
      case ScriptedKind::kCopycat: return ModalAction(ctx.history, ctx.labels);
      case ScriptedKind::kGreedyMean: return GreedyMeanAction(ctx.history, ctx.labels);
      case ScriptedKind::kUniformRandom: return -1;
    }
    return -1;
  }

  ScriptedKind kind_;
};

class UcbAgent final : public Agent {
 public:
  UcbAgent(UcbVariant variant, double c) : variant_(variant), c_(c) {}

  std::string Name() const override {
    return variant_ == UcbVariant::kUnitBonus ? "ucb-unit" : "ucb";
  }

  AgentReply Act(const StepContext& ctx, Rng&) override {
    return ReplyFor(ctx, Select(ctx));
  }

  std::optional<VectorXd> ExactDistribution(const StepContext& ctx) const override {
    return OneHot(static_cast<int>(ctx.labels.size()), Select(ctx));
  }

 private:
  int Select(const StepContext& ctx) const {
    return UcbSelectIndex(UcbStateFromHistory(ctx.history, ctx.labels, variant_, c_));
  }

  UcbVariant variant_;
  double c_;
};

class LinUcbAgent final : public Agent {
 public:
  explicit LinUcbAgent(double alpha) : alpha_(alpha) {}

  std::string Name() const override { return "linucb"; }

  AgentReply Act(const StepContext& ctx, Rng&) override {
    return ReplyFor(ctx, Select(ctx));
  }

  std::optional<VectorXd> ExactDistribution(const StepContext& ctx) const override {
    return OneHot(static_cast<int>(ctx.labels.size()), Select(ctx));
  }

 private:
  int Select(const StepContext& ctx) const {
    VectorXd x = LinUcbContext(ctx.context);
    int k = static_cast<int>(ctx.labels.size());
    LinUcbState<double> state(k, static_cast<int>(x.size()));
    for (const auto& tr : ctx.history) {
      auto it = std::find(ctx.labels.begin(), ctx.labels.end(), tr.action);
      if (it == ctx.labels.end()) continue;
      VectorXd xs = LinUcbContext(tr.context);
      if (xs.size() != x.size()) continue;
      state.Update(static_cast<int>(it - ctx.labels.begin()), xs, tr.reward);
    }
    std::vector<VectorXd> features(k, x);
    return LinUcbSelect<double>(features, state, alpha_);
  }

  double alpha_;
};

class MctsAgent final : public Agent {
 public:
  explicit MctsAgent(const MctsConfig& config) : config_(config) {}

  std::string Name() const override {
    return config_.noise_p > 0.0 ? "mcts-noisy" : "mcts";
  }

  AgentReply Act(const StepContext& ctx, Rng& rng) override {
    if (!ctx.board) throw ConfigError("MCTS agent needs a board observation");
    int cell = MctsSelect(*ctx.board, config_, rng);
    return ReplyFor(ctx, ctx.LabelIndex(std::to_string(cell)));
  }

 private:
  MctsConfig config_;
};

}  // namespace

AgentPtr MakeScriptedAgent(ScriptedKind kind) {
  return std::make_shared<ScriptedAgent>(kind);
}

AgentPtr MakeRandomAgent() { return MakeScriptedAgent(ScriptedKind::kUniformRandom); }

AgentPtr MakeUcbAgent(UcbVariant variant, double c) {
  return std::make_shared<UcbAgent>(variant, c);
}

AgentPtr MakeLinUcbAgent(double alpha) { return std::make_shared<LinUcbAgent>(alpha); }

AgentPtr MakeMctsAgent(const MctsConfig& config) {
  return std::make_shared<MctsAgent>(config);
}

}  // namespace lmdecide
