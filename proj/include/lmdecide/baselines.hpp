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

// Classic decision-making baselines: UCB (two bonus variants), disjoint
// LinUCB, UCT Monte Carlo tree search with an optional noisy branch, and the
// scripted agents used to calibrate probes.

#ifndef LMDECIDE_BASELINES_HPP_
#define LMDECIDE_BASELINES_HPP_

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lmdecide/agent.hpp"
#include "lmdecide/common.hpp"
#include "lmdecide/env_tictactoe.hpp"

namespace lmdecide {

// ---------------------------------------------------------------------------
// UCB

enum class UcbVariant {
  // mean + c * sqrt(ln t / n)
  kStandard,
  // mean + sqrt(1 / n)
  kUnitBonus,
};

struct UcbState {
  std::vector<std::string> labels;
  std::vector<int> counts;
  std::vector<double> sums;
  // Reward terms per arm, in pull order (for rationale rendering).
  std::vector<std::vector<double>> rewards;
  int t = 0;
  UcbVariant variant = UcbVariant::kStandard;
  double c = std::sqrt(2.0);

  int num_arms() const { return static_cast<int>(labels.size()); }
  int Index(const std::string& label) const;
  // NaN for untried arms.
  double Mean(int arm) const;
  // +inf for untried arms.
  double Value(int arm) const;
};

UcbState MakeUcbState(std::span<const std::string> labels,
                      UcbVariant variant = UcbVariant::kStandard,
                      double c = std::sqrt(2.0));
UcbState UcbUpdate(UcbState state, const std::string& arm, double reward);
void UcbUpdateInPlace(UcbState& state, int arm, double reward);
// Lowest-index untried arm if any; else the argmax UCB value, ties to the
// lowest index.
int UcbSelectIndex(const UcbState& state);
std::string UcbSelect(const UcbState& state);
// Folds the history through UcbUpdate. Unknown labels are skipped.
UcbState UcbStateFromHistory(std::span<const Transition> history,
                             std::span<const std::string> labels,
                             UcbVariant variant = UcbVariant::kStandard,
                             double c = std::sqrt(2.0));

// ---------------------------------------------------------------------------
// Disjoint LinUCB with ridge statistics per arm.

template <typename Scalar>
struct LinUcbArm {
  Matrix<Scalar> A;  // d x d, identity at start
  Vector<Scalar> b;  // d
};

template <typename Scalar>
class LinUcbState {
 public:
  LinUcbState(int num_arms, int dim) : dim_(dim) {
    if (num_arms < 1 || dim < 1) throw ConfigError("LinUCB needs arms and dim >= 1");
    arms_.resize(num_arms);
    for (auto& arm : arms_) {
      arm.A = Matrix<Scalar>::Identity(dim, dim);
      arm.b = Vector<Scalar>::Zero(dim);
    }
  }

  int dim() const { return dim_; }
  int num_arms() const { return static_cast<int>(arms_.size()); }
  const LinUcbArm<Scalar>& arm(int a) const { return arms_[a]; }
  LinUcbArm<Scalar>& arm(int a) { return arms_[a]; }

  void Update(int a, const Vector<Scalar>& x, Scalar reward) {
    CheckDim(x);
    arms_[a].A.noalias() += x * x.transpose();
    arms_[a].b += reward * x;
  }

  // theta_a^T x + alpha * sqrt(x^T A_a^{-1} x)
  Scalar Score(int a, const Vector<Scalar>& x, Scalar alpha) const {
    CheckDim(x);
    Eigen::LLT<Matrix<Scalar>> llt(arms_[a].A);
    Vector<Scalar> theta = llt.solve(arms_[a].b);
    Vector<Scalar> ainv_x = llt.solve(x);
    using std::sqrt;
    return theta.dot(x) + alpha * sqrt(x.dot(ainv_x));
  }

  void CheckDim(const Vector<Scalar>& x) const {
    if (x.size() != dim_) throw ConfigError("LinUCB feature dimension mismatch");
    if (!x.allFinite()) throw ConfigError("LinUCB features must be finite");
  }

 private:
  int dim_;
  std::vector<LinUcbArm<Scalar>> arms_;
};

template <typename Scalar>
Vector<Scalar> LinUcbScores(std::span<const Vector<Scalar>> features,
                            const LinUcbState<Scalar>& state, Scalar alpha) {
  if (static_cast<int>(features.size()) != state.num_arms()) {
    throw ConfigError("LinUCB needs one feature vector per arm");
  }
  Vector<Scalar> scores(state.num_arms());
  for (int a = 0; a < state.num_arms(); ++a) scores[a] = state.Score(a, features[a], alpha);
  return scores;
}

// Argmax score with lowest-index ties.
template <typename Scalar>
int LinUcbSelect(std::span<const Vector<Scalar>> features,
                 const LinUcbState<Scalar>& state, Scalar alpha) {
  Vector<Scalar> scores = LinUcbScores(features, state, alpha);
  int best = 0;
  for (int a = 1; a < scores.size(); ++a) {
    if (scores[a] > scores[best]) best = a;
  }
  return best;
}

// Context vector used by the LinUCB agent: [1, preferences...].
VectorXd LinUcbContext(const VectorXd& preferences);

// ---------------------------------------------------------------------------
// Monte Carlo tree search (UCT, uniform rollouts).

struct MctsConfig {
  int simulations = 1000;
  double uct_c = std::sqrt(2.0);
  // Probability of replacing the search result with a uniform legal move.
  double noise_p = 0.0;
};

// Most-visited root child after `simulations` playouts (ties to the lowest
// action). Throws IllegalActionError on terminal boards.
int MctsSelect(const Board& board, const MctsConfig& config, Rng& rng);
// Visit counts of the root children, indexed by cell (0 for illegal cells).
std::vector<int> MctsVisitCounts(const Board& board, const MctsConfig& config,
                                 Rng& rng);

// ---------------------------------------------------------------------------
// Agents.

enum class ScriptedKind { kCopycat, kGreedyMean, kUniformRandom };

// Most frequent action in the history (ties to the lowest label index);
// -1 on an empty history.
int ModalAction(std::span<const Transition> history,
                std::span<const std::string> labels);
// Tried action with the highest mean reward (ties to the lowest index);
// -1 on an empty history.
int GreedyMeanAction(std::span<const Transition> history,
                     std::span<const std::string> labels);

AgentPtr MakeScriptedAgent(ScriptedKind kind);
AgentPtr MakeRandomAgent();
AgentPtr MakeUcbAgent(UcbVariant variant = UcbVariant::kStandard,
                      double c = std::sqrt(2.0));
AgentPtr MakeLinUcbAgent(double alpha = 1.0);
AgentPtr MakeMctsAgent(const MctsConfig& config);

}  // namespace lmdecide

#endif  // LMDECIDE_BASELINES_HPP_
