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

// The built-in linear-softmax policy with a linear value head, its
// featurizers, and action-distribution estimation for any agent.

#ifndef LMDECIDE_AGENTS_HPP_
#define LMDECIDE_AGENTS_HPP_

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmdecide/agent.hpp"
#include "lmdecide/common.hpp"

namespace lmdecide {

// Per-action features: [n_a/(t+1), mean_a, sqrt(1/(n_a+1)), untried,
// last-action, modal-action, 1] for bandits and [empty, win, block, center,
// corner, edge, 1] for tic-tac-toe cells.
inline constexpr int kArmFeatureDim = 7;
// Value-head state features.
inline constexpr int kStateFeatureDim = 6;

enum ArmFeature : int {
  kFeatCount = 0,
  kFeatMean = 1,
  kFeatBonus = 2,
  kFeatUntried = 3,
  kFeatLast = 4,
  kFeatModal = 5,
  kFeatBias = 6,
};

enum CellFeature : int {
  kCellEmpty = 0,
  kCellWin = 1,
  kCellBlock = 2,
  kCellCenter = 3,
  kCellCorner = 4,
  kCellEdge = 5,
  kCellBias = 6,
};

template <typename Scalar>
struct PolicyParams {
  Vector<Scalar> weights;        // kArmFeatureDim, shared across actions
  Vector<Scalar> value_weights;  // kStateFeatureDim
  Vector<Scalar> reference;      // frozen copy of the initial weights

  static PolicyParams Zero() {
    PolicyParams p;
    p.weights = Vector<Scalar>::Zero(kArmFeatureDim);
    p.value_weights = Vector<Scalar>::Zero(kStateFeatureDim);
    p.reference = p.weights;
    return p;
  }
};

using Params = PolicyParams<double>;

// Weights mimicking a pretrained model that leans on the best-so-far and
// the most repeated action. Used as the default reference for RLFT runs.
Params GreedyPriorParams();

// Stable softmax of a score vector.
template <typename Scalar>
Vector<Scalar> Softmax(const Vector<Scalar>& scores) {
  Scalar m = scores.maxCoeff();
  Vector<Scalar> e = (scores.array() - m).exp().matrix();
  return e / e.sum();
}

template <typename Scalar>
Vector<Scalar> LogSoftmax(const Vector<Scalar>& scores) {
  using std::log;
  Scalar m = scores.maxCoeff();
  Scalar lse = m + log((scores.array() - m).exp().sum());
  return (scores.array() - lse).matrix();
}

// phi: one row per action.
template <typename Scalar>
Vector<Scalar> PolicyProbs(const Vector<Scalar>& weights, const Matrix<Scalar>& phi) {
  if (phi.rows() < 1) throw ConfigError("policy needs at least one action");
  if (!phi.allFinite() || !weights.allFinite()) {
    throw NumericalError("non-finite policy features or weights");
  }
  return Softmax<Scalar>(phi * weights);
}

template <typename Scalar>
Vector<Scalar> PolicyLogProbs(const Vector<Scalar>& weights, const Matrix<Scalar>& phi) {
  if (!phi.allFinite() || !weights.allFinite()) {
    throw NumericalError("non-finite policy features or weights");
  }
  return LogSoftmax<Scalar>(phi * weights);
}

// Gradient of log pi(action) w.r.t. weights: phi_a - sum_b pi(b) phi_b.
template <typename Scalar>
Vector<Scalar> PolicyLogProbGrad(const Vector<Scalar>& weights,
                                 const Matrix<Scalar>& phi, int action) {
  Vector<Scalar> p = PolicyProbs<Scalar>(weights, phi);
  return phi.row(action).transpose() - phi.transpose() * p;
}

template <typename Scalar>
Scalar ValueEstimate(const Vector<Scalar>& value_weights, const Vector<Scalar>& psi) {
  if (!psi.allFinite()) throw NumericalError("non-finite state features");
  return value_weights.dot(psi);
}

// Gradient of 0.5 * (V(psi) - target)^2 w.r.t. value_weights.
template <typename Scalar>
Vector<Scalar> ValueLossGrad(const Vector<Scalar>& value_weights,
                             const Vector<Scalar>& psi, Scalar target) {
  return (ValueEstimate<Scalar>(value_weights, psi) - target) * psi;
}

// Shannon entropy in nats; zero-probability terms contribute 0.
double Entropy(const VectorXd& probs);

// ---------------------------------------------------------------------------
// Featurizers.

MatrixXd BanditArmFeatures(std::span<const Transition> history,
                           std::span<const std::string> labels);
VectorXd BanditStateFeatures(std::span<const Transition> history,
                             std::span<const std::string> labels, int step,
                             int horizon);
MatrixXd TicTacToeCellFeatures(const Board& board, bool legal_in_context);
VectorXd TicTacToeStateFeatures(const Board& board);

struct Featurization {
  MatrixXd phi;  // actions x kArmFeatureDim
  VectorXd psi;  // kStateFeatureDim
};

Featurization Featurize(const StepContext& ctx);

// ---------------------------------------------------------------------------

class BuiltinPolicyAgent final : public Agent {
 public:
  explicit BuiltinPolicyAgent(Params params);

  std::string Name() const override { return "policy"; }
  // Samples from softmax(scores / temperature); temperature 0 is argmax.
  AgentReply Act(const StepContext& ctx, Rng& rng) override;
  std::optional<VectorXd> ExactDistribution(const StepContext& ctx) const override;

  const Params& params() const { return params_; }
  void set_params(const Params& params) { params_ = params; }

 private:
  Params params_;
};

std::shared_ptr<BuiltinPolicyAgent> MakePolicyAgent(Params params);

// Temperature-scaled action probabilities of the built-in policy.
VectorXd TemperedProbs(const VectorXd& weights, const MatrixXd& phi,
                       double temperature);

enum class DistributionMode { kExact, kSampled };

// Exact mode requires an agent with ExactDistribution. Sampled mode issues
// `samples` generations at temperature 1 and returns valid-action
// frequencies; throws EstimationError when every sample is invalid.
VectorXd ActionDistribution(Agent& agent, const StepContext& ctx,
                            DistributionMode mode, int samples, Rng& rng);

}  // namespace lmdecide

#endif  // LMDECIDE_AGENTS_HPP_
