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

// Policy-gradient fine-tuning of the built-in policy: reward shaping and
// normalization, rewards-to-go and GAE advantages, the clipped ratio
// objective with a KL leash and value loss, supervised imitation, and
// checkpointed training loops.

#ifndef LMDECIDE_RLFT_HPP_
#define LMDECIDE_RLFT_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmdecide/agents.hpp"
#include "lmdecide/episode.hpp"
#include "lmdecide/exploration.hpp"

namespace lmdecide {

enum class AdvantageMode { kRewardsToGo, kGae };

struct TrainConfig {
  int batch_size = 128;
  int total_updates = 30000;
  int update_epochs = 1;
  double clip_eps = 0.2;
  double kl_beta = 0.05;
  double lr_peak = 1e-4;
  double lr_final = 1e-6;
  int warmup_steps = 100;
  double grad_clip = 1.0;
  bool reward_norm = true;
  bool normalize_advantages = true;
  AdvantageMode advantage_mode = AdvantageMode::kRewardsToGo;
  double gamma = 0.99;
  double lambda = 0.95;
  double value_coef = 0.5;
  int rollout_steps = 800;
  int subset_size = 16;
  int eval_every = 10000;
  double invalid_penalty = kInvalidPenalty;
  double exploration_bonus = 0.0;
  double train_temperature = 1.0;
  double divergence_threshold = 10.0;
  bool legal_in_context = true;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Welford running statistics over raw environment rewards.
struct RewardNormalizer {
  double mean = 0.0;
  double m2 = 0.0;
  long long count = 0;

  void Update(double r);
  double variance() const;
  // (r - mean) / sqrt(max(variance, 1e-8)); identity before any update.
  double Normalize(double r) const;
};

// normalize(r_env) (when a normalizer is given) + penalty if invalid + bonus.
double ShapeReward(double r_env, bool valid, const RewardNormalizer* normalizer,
                   double bonus = 0.0, double penalty = kInvalidPenalty);

std::vector<double> RewardsToGo(std::span<const double> rewards);
// A_t = RTG_t - mean over episodes of RTG at step index t.
std::vector<std::vector<double>> McAdvantages(
    const std::vector<std::vector<double>>& episode_rewards);
// `values` has one more entry than `rewards` (the bootstrap, 0 at a true end).
std::vector<double> GaeAdvantages(std::span<const double> rewards,
                                  std::span<const double> values, double gamma,
                                  double lambda);
// In-place z-scoring; a constant batch becomes all zeros.
void NormalizeAdvantages(std::span<double> advantages);

// min(rho*A, clip(rho, 1-eps, 1+eps)*A) - beta*kl, rho = exp(new - old).
double PpoKlLoss(double new_logprob, double old_logprob, double advantage,
                 double kl_term, double eps, double beta);

// Exact categorical KL(pi_weights || pi_reference) over the rows of phi.
template <typename Scalar>
Scalar KlToReference(const Vector<Scalar>& weights, const Vector<Scalar>& reference,
                     const Matrix<Scalar>& phi) {
  Vector<Scalar> lp = PolicyLogProbs<Scalar>(weights, phi);
  Vector<Scalar> lq = PolicyLogProbs<Scalar>(reference, phi);
  Vector<Scalar> p = lp.array().exp().matrix();
  return p.dot(lp - lq);
}

// Gradient of KlToReference w.r.t. weights: phi^T (p * (l - KL)).
VectorXd KlGrad(const VectorXd& weights, const VectorXd& reference, const MatrixXd& phi);

double LearningRate(int update, const TrainConfig& config);

// Flattened parameter vector: [weights; value_weights].
VectorXd FlattenParams(const Params& params);
void UnflattenParams(const VectorXd& flat, Params& params);

struct BufferEntry {
  MatrixXd phi;
  VectorXd psi;
  int action = 0;
  double old_logprob = 0.0;
  double value = 0.0;
  double r_env = 0.0;
  double reward = 0.0;
  bool valid = true;
  int episode = 0;
  int step = 0;
  double advantage = 0.0;
  double ret = 0.0;
};

struct ObjectiveResult {
  double objective = 0.0;
  double surrogate = 0.0;
  double kl = 0.0;
  double value_loss = 0.0;
  double ratio_mean = 0.0;
  double ratio_dev = 0.0;  // mean |rho - 1|
  double clip_fraction = 0.0;
  VectorXd grad;           // d objective / d flat params
};

// Batch mean of surrogate - beta*KL - value_coef*0.5*(V - ret)^2, with
// advantages taken as stored in the entries.
ObjectiveResult BatchObjective(const Params& params, std::span<const BufferEntry> batch,
                               const TrainConfig& config, bool with_grad = true);

struct LogRow {
  int update = 0;
  double lr = 0.0;
  double objective = 0.0;
  double kl = 0.0;
  double ratio_mean = 0.0;
  double ratio_dev = 0.0;
  double clip_fraction = 0.0;
  double value_loss = 0.0;
  std::optional<double> eval_metric;
};

std::string TrainLogHeader();
std::string TrainLogLine(const LogRow& row);
void WriteTrainLog(const std::filesystem::path& path, std::span<const LogRow> rows);

// Everything needed to continue a run exactly: the rollout buffer of the
// current phase is regenerated from the phase-start state.
struct Checkpoint {
  int update = 0;
  Params params;
  Params phase_params;
  RewardNormalizer phase_normalizer;
  std::string phase_rng;
  int cursor = 0;  // minibatch updates already applied in this phase
};

void SaveParams(const Params& params, const std::filesystem::path& path);
Params LoadParams(const std::filesystem::path& path);

void SaveCheckpoint(const Checkpoint& ckpt, const TrainConfig& config,
                    const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

using EnvFactory = std::function<std::unique_ptr<Environment>(int index)>;

struct TrainHooks {
  // Called after every multiple of eval_every updates and at the end.
  std::function<double(const Params&)> evaluate;
  std::function<void(const Checkpoint&)> on_checkpoint;
  // Stop after this many updates (for resume tests); negative runs to the end.
  int stop_after = -1;
};

struct TrainResult {
  Params params;
  std::vector<LogRow> log;
  int updates = 0;
  int phases = 0;
};

// Collects one phase of rollouts with the (wrapped) built-in policy.
std::vector<BufferEntry> CollectRollouts(const EnvFactory& make_env, int pool_size,
                                         const Params& params,
                                         const std::vector<MechanismConfig>& mechanisms,
                                         const TrainConfig& config,
                                         RewardNormalizer& normalizer, Rng& rng);

TrainResult TrainRlft(const EnvFactory& make_env, int pool_size, const Params& init,
                      const TrainConfig& config,
                      const std::vector<MechanismConfig>& mechanisms = {},
                      const TrainHooks& hooks = {},
                      const std::optional<Checkpoint>& resume = std::nullopt);

// ---------------------------------------------------------------------------

struct SftExample {
  MatrixXd phi;
  int action = 0;
};

struct SftConfig {
  int steps = 500;
  double lr = 1e-2;
  // 0 selects full-batch steps.
  int batch_size = 0;
  double grad_clip = 0.0;  // 0 disables clipping
  std::uint64_t seed = 0;
};

// Mean negative log-likelihood of the expert actions.
double SftLoss(const VectorXd& weights, std::span<const SftExample> data);
VectorXd SftGrad(const VectorXd& weights, std::span<const SftExample> data);

struct SftResult {
  Params params;
  std::vector<double> losses;  // loss before each step
};

SftResult TrainSft(std::span<const SftExample> data, const Params& init,
                   const SftConfig& config);

}  // namespace lmdecide

#endif  // LMDECIDE_RLFT_HPP_
