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

#include "lmdecide/agents.hpp"

#include <algorithm>
#include <utility>

#include "lmdecide/baselines.hpp"

namespace lmdecide {

int StepContext::LabelIndex(const std::string& label) const {
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
    if (labels[i] == label) return i;
  }
  throw UnknownActionError("unknown action '" + label + "'");
}

Params GreedyPriorParams() {
  Params p = Params::Zero();
  p.weights[kFeatMean] = 3.0;
  p.weights[kFeatLast] = 1.0;
  p.weights[kFeatModal] = 1.0;
  p.weights[kFeatUntried] = -1.0;
  p.reference = p.weights;
  return p;
}

double Entropy(const VectorXd& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

// ---------------------------------------------------------------------------

MatrixXd BanditArmFeatures(std::span<const Transition> history,
                           std::span<const std::string> labels) {
  const int k = static_cast<int>(labels.size());
  UcbState s = UcbStateFromHistory(history, labels);
  MatrixXd phi = MatrixXd::Zero(k, kArmFeatureDim);
  int last = -1;
  if (!history.empty()) {
    auto it = std::find(labels.begin(), labels.end(), history.back().action);
    if (it != labels.end()) last = static_cast<int>(it - labels.begin());
  }
  int modal = ModalAction(history, labels);
  for (int a = 0; a < k; ++a) {
    double n = s.counts[a];
    phi(a, kFeatCount) = n / (s.t + 1.0);
    phi(a, kFeatMean) = s.counts[a] > 0 ? s.Mean(a) : 0.0;
    phi(a, kFeatBonus) = std::sqrt(1.0 / (n + 1.0));
    phi(a, kFeatUntried) = s.counts[a] == 0 ? 1.0 : 0.0;
    phi(a, kFeatLast) = a == last ? 1.0 : 0.0;
    phi(a, kFeatModal) = a == modal ? 1.0 : 0.0;
    phi(a, kFeatBias) = 1.0;
  }
  return phi;
}

VectorXd BanditStateFeatures(std::span<const Transition> history,
                             std::span<const std::string> labels, int step,
                             int horizon) {
  UcbState s = UcbStateFromHistory(history, labels);
  double remaining = horizon > 0 ? std::max(0, horizon - step) / double(horizon) : 0.0;
  double best = 0.0, total = 0.0;
  int tried = 0;
  bool any = false;
  for (int a = 0; a < s.num_arms(); ++a) {
    if (s.counts[a] == 0) continue;
    best = any ? std::max(best, s.Mean(a)) : s.Mean(a);
    any = true;
    ++tried;
    total += s.sums[a];
  }
  double avg = s.t > 0 ? total / s.t : 0.0;
  double coverage = static_cast<double>(tried) / s.num_arms();
  VectorXd psi(kStateFeatureDim);
  psi << 1.0, remaining, remaining * best, remaining * avg, coverage,
      remaining * coverage;
  return psi;
}

namespace {

constexpr int kLines[8][3] = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {0, 3, 6},
                              {1, 4, 7}, {2, 5, 8}, {0, 4, 8}, {2, 4, 6}};

// True if `player` placing at empty `cell` completes a line.
bool Completes(const Board& board, int cell, std::uint8_t player) {
  for (const auto& line : kLines) {
    int own = 0;
    bool on_line = false;
    for (int c : line) {
      if (c == cell) {
        on_line = true;
      } else if (board.cells[c] == player) {
        ++own;
      }
    }
    if (on_line && own == 2) return true;
  }
  return false;
}

}  // namespace

MatrixXd TicTacToeCellFeatures(const Board& board, bool legal_in_context) {
  MatrixXd phi = MatrixXd::Zero(9, kArmFeatureDim);
  auto me = static_cast<std::uint8_t>(board.to_move);
  auto them = static_cast<std::uint8_t>(Other(board.to_move));
  for (int c = 0; c < 9; ++c) {
    bool empty = board.cells[c] == 0;
    phi(c, kCellEmpty) = legal_in_context && empty ? 1.0 : 0.0;
    phi(c, kCellWin) = empty && Completes(board, c, me) ? 1.0 : 0.0;
    phi(c, kCellBlock) = empty && Completes(board, c, them) ? 1.0 : 0.0;
    phi(c, kCellCenter) = c == 4 ? 1.0 : 0.0;
    phi(c, kCellCorner) = (c == 0 || c == 2 || c == 6 || c == 8) ? 1.0 : 0.0;
    phi(c, kCellEdge) = (c == 1 || c == 3 || c == 5 || c == 7) ? 1.0 : 0.0;
    phi(c, kCellBias) = 1.0;
  }
  return phi;
}

VectorXd TicTacToeStateFeatures(const Board& board) {
  auto me = static_cast<std::uint8_t>(board.to_move);
  auto them = static_cast<std::uint8_t>(Other(board.to_move));
  int my_threats = 0, their_threats = 0;
  for (int c = 0; c < 9; ++c) {
    if (board.cells[c] != 0) continue;
    my_threats += Completes(board, c, me);
    their_threats += Completes(board, c, them);
  }
  VectorXd psi(kStateFeatureDim);
  psi << 1.0, board.MoveCount() / 9.0, std::min(my_threats, 3) / 3.0,
      std::min(their_threats, 3) / 3.0, board.cells[4] == me ? 1.0 : 0.0,
      board.cells[4] == them ? 1.0 : 0.0;
  return psi;
}

Featurization Featurize(const StepContext& ctx) {
  if (ctx.kind == EnvKind::kTicTacToe) {
    if (!ctx.board) throw ConfigError("tic-tac-toe featurization needs a board");
    return {TicTacToeCellFeatures(*ctx.board, ctx.legal_in_context),
            TicTacToeStateFeatures(*ctx.board)};
  }
  return {BanditArmFeatures(ctx.history, ctx.labels),
          BanditStateFeatures(ctx.history, ctx.labels, ctx.step, ctx.horizon)};
}

// ---------------------------------------------------------------------------

VectorXd TemperedProbs(const VectorXd& weights, const MatrixXd& phi,
                       double temperature) {
  if (temperature <= 0.0) {
    VectorXd scores = phi * weights;
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < scores.size(); ++i) {
      if (scores[i] > scores[best]) best = i;
    }
    VectorXd p = VectorXd::Zero(scores.size());
    p[best] = 1.0;
    return p;
  }
  return PolicyProbs<double>(weights / temperature, phi);
}

namespace {

int SampleIndex(const VectorXd& probs, Rng& rng) {
  double u = Uniform01(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  for (Eigen::Index i = probs.size() - 1; i >= 0; --i) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

}  // namespace

BuiltinPolicyAgent::BuiltinPolicyAgent(Params params) : params_(std::move(params)) {
  if (params_.weights.size() != kArmFeatureDim ||
      params_.value_weights.size() != kStateFeatureDim) {
    throw ConfigError("policy parameter dimensions do not match the featurizer");
  }
}

AgentReply BuiltinPolicyAgent::Act(const StepContext& ctx, Rng& rng) {
  Featurization f = Featurize(ctx);
  VectorXd probs = TemperedProbs(params_.weights, f.phi, ctx.temperature);
  int pick = SampleIndex(probs, rng);
  AgentReply reply = MakeReply("ACTION=" + ctx.labels[pick], ctx.ActionSet());
  reply.action_probs = probs;
  return reply;
}

std::optional<VectorXd> BuiltinPolicyAgent::ExactDistribution(
    const StepContext& ctx) const {
  return PolicyProbs<double>(params_.weights, Featurize(ctx).phi);
}

std::shared_ptr<BuiltinPolicyAgent> MakePolicyAgent(Params params) {
  return std::make_shared<BuiltinPolicyAgent>(std::move(params));
}

VectorXd ActionDistribution(Agent& agent, const StepContext& ctx,
                            DistributionMode mode, int samples, Rng& rng) {
  const int n = static_cast<int>(ctx.labels.size());
  if (mode == DistributionMode::kExact) {
    auto p = agent.ExactDistribution(ctx);
    if (!p) throw ConfigError("agent '" + agent.Name() + "' has no exact distribution");
    return *p;
  }
  if (samples < 1) throw ConfigError("sampled distribution needs samples >= 1");
  StepContext hot = ctx;
  hot.temperature = 1.0;
  VectorXd counts = VectorXd::Zero(n);
  int valid = 0;
  for (int m = 0; m < samples; ++m) {
    AgentReply r = agent.Act(hot, rng);
    if (!r.valid || !r.extracted_action) continue;
    counts[ctx.LabelIndex(*r.extracted_action)] += 1.0;
    ++valid;
  }
  if (valid == 0) throw EstimationError("every sampled generation was invalid");
  return counts / valid;
}

}  // namespace lmdecide
