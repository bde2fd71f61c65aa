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

#include "lmdecide/rlft.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace lmdecide {

using nlohmann::json;

void TrainConfig::Validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (total_updates < 0) throw ConfigError("total_updates must be >= 0");
  if (update_epochs < 1) throw ConfigError("update_epochs must be >= 1");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("clip epsilon must be in (0, 1)");
  if (kl_beta < 0.0) throw ConfigError("KL beta must be >= 0");
  if (!(lr_peak > 0.0) || lr_final < 0.0) throw ConfigError("learning rates must be positive");
  if (warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
  if (!(grad_clip > 0.0)) throw ConfigError("grad_clip must be > 0");
  if (!(gamma > 0.0 && gamma <= 1.0) || !(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("GAE gamma must be in (0, 1] and lambda in [0, 1]");
  }
  if (value_coef < 0.0) throw ConfigError("value_coef must be >= 0");
  if (rollout_steps < 1) throw ConfigError("rollout_steps must be >= 1");
  if (subset_size < 1) throw ConfigError("subset_size must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (train_temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (!std::isfinite(exploration_bonus)) throw ConfigError("bonus must be finite");
}

// ---------------------------------------------------------------------------
// Rewards and advantages.

void RewardNormalizer::Update(double r) {
  ++count;
  double delta = r - mean;
  mean += delta / static_cast<double>(count);
  m2 += delta * (r - mean);
}

double RewardNormalizer::variance() const {
  return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
}

double RewardNormalizer::Normalize(double r) const {
  if (count == 0) return r;
  return (r - mean) / std::sqrt(std::max(variance(), 1e-8));
}

double ShapeReward(double r_env, bool valid, const RewardNormalizer* normalizer,
                   double bonus, double penalty) {
  double r = normalizer ? normalizer->Normalize(r_env) : r_env;
  if (!valid) r += penalty;
  return r + bonus;
}

std::vector<double> RewardsToGo(std::span<const double> rewards) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc += rewards[i];
    out[i] = acc;
  }
  return out;
}

std::vector<std::vector<double>> McAdvantages(
    const std::vector<std::vector<double>>& episode_rewards) {
  std::vector<std::vector<double>> rtg;
  std::size_t longest = 0;
  for (const auto& ep : episode_rewards) {
    rtg.push_back(RewardsToGo(ep));
    longest = std::max(longest, ep.size());
  }
  std::vector<double> sum(longest, 0.0);
  std::vector<int> n(longest, 0);
  for (const auto& ep : rtg) {
    for (std::size_t t = 0; t < ep.size(); ++t) {
      sum[t] += ep[t];
      ++n[t];
    }
  }
  for (auto& ep : rtg) {
    for (std::size_t t = 0; t < ep.size(); ++t) ep[t] -= sum[t] / n[t];
  }
  return rtg;
}

std::vector<double> GaeAdvantages(std::span<const double> rewards,
                                  std::span<const double> values, double gamma,
                                  double lambda) {
  if (values.size() != rewards.size() + 1) {
    throw ConfigError("GAE needs one value per step plus a bootstrap value");
  }
  std::vector<double> adv(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    double delta = rewards[t] + gamma * values[t + 1] - values[t];
    acc = delta + gamma * lambda * acc;
    adv[t] = acc;
  }
  return adv;
}

void NormalizeAdvantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  double n = static_cast<double>(advantages.size());
  double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= n;
  double sd = std::sqrt(var);
  for (double& a : advantages) a = sd > 1e-12 ? (a - mean) / sd : 0.0;
}

double PpoKlLoss(double new_logprob, double old_logprob, double advantage,
                 double kl_term, double eps, double beta) {
  double rho = std::exp(new_logprob - old_logprob);
  if (!std::isfinite(rho)) throw NumericalError("probability ratio is not finite");
  double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps);
  return std::min(rho * advantage, clipped * advantage) - beta * kl_term;
}

VectorXd KlGrad(const VectorXd& weights, const VectorXd& reference, const MatrixXd& phi) {
  VectorXd lp = PolicyLogProbs<double>(weights, phi);
  VectorXd lq = PolicyLogProbs<double>(reference, phi);
  VectorXd p = lp.array().exp().matrix();
  VectorXd l = lp - lq;
  double kl = p.dot(l);
  return phi.transpose() * (p.array() * (l.array() - kl)).matrix();
}

double LearningRate(int update, const TrainConfig& config) {
  if (update < config.warmup_steps) {
    return config.lr_peak * (update + 1) / static_cast<double>(config.warmup_steps);
  }
  int span = std::max(1, config.total_updates - config.warmup_steps);
  double progress = std::min(1.0, (update - config.warmup_steps) / static_cast<double>(span));
  return config.lr_final + 0.5 * (config.lr_peak - config.lr_final) *
                               (1.0 + std::cos(std::numbers::pi * progress));
}

VectorXd FlattenParams(const Params& params) {
  VectorXd flat(params.weights.size() + params.value_weights.size());
  flat << params.weights, params.value_weights;
  return flat;
}

void UnflattenParams(const VectorXd& flat, Params& params) {
  params.weights = flat.head(params.weights.size());
  params.value_weights = flat.tail(params.value_weights.size());
}

ObjectiveResult BatchObjective(const Params& params, std::span<const BufferEntry> batch,
                               const TrainConfig& config, bool with_grad) {
  ObjectiveResult res;
  const Eigen::Index dw = params.weights.size();
  const Eigen::Index dv = params.value_weights.size();
  VectorXd gw = VectorXd::Zero(dw);
  VectorXd gv = VectorXd::Zero(dv);
  if (batch.empty()) {
    res.grad = VectorXd::Zero(dw + dv);
    return res;
  }
  const double eps = config.clip_eps;
  const double beta = config.kl_beta;
  for (const auto& e : batch) {
    VectorXd lp = PolicyLogProbs<double>(params.weights, e.phi);
    VectorXd p = lp.array().exp().matrix();
    double rho = std::exp(lp[e.action] - e.old_logprob);
    if (!std::isfinite(rho)) throw NumericalError("probability ratio is not finite");
    double unclipped = rho * e.advantage;
    double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps) * e.advantage;
    double surr = std::min(unclipped, clipped);

    VectorXd lq = PolicyLogProbs<double>(params.reference, e.phi);
    VectorXd l = lp - lq;
    double kl = p.dot(l);

    double v = params.value_weights.dot(e.psi);
    double vl = 0.5 * (v - e.ret) * (v - e.ret);

    res.surrogate += surr;
    res.kl += kl;
    res.value_loss += vl;
    res.ratio_mean += rho;
    res.ratio_dev += std::abs(rho - 1.0);
    if (unclipped > clipped) res.clip_fraction += 1.0;

    if (with_grad) {
      VectorXd mean_phi = e.phi.transpose() * p;
      if (unclipped <= clipped) {
        gw += (e.advantage * rho) * (e.phi.row(e.action).transpose() - mean_phi);
      }
      gw -= beta * (e.phi.transpose() * (p.array() * (l.array() - kl)).matrix());
      gv -= config.value_coef * (v - e.ret) * e.psi;
    }
  }
  const double n = static_cast<double>(batch.size());
  res.surrogate /= n;
  res.kl /= n;
  res.value_loss /= n;
  res.ratio_mean /= n;
  res.ratio_dev /= n;
  res.clip_fraction /= n;
  res.objective = res.surrogate - beta * res.kl - config.value_coef * res.value_loss;
  res.grad.resize(dw + dv);
  res.grad << gw / n, gv / n;
  return res;
}

// ---------------------------------------------------------------------------
// Logs and checkpoints.

std::string TrainLogHeader() {
  return "update,lr,objective,kl,ratio_mean,ratio_dev,clip_fraction,value_loss,eval_metric";
}

std::string TrainLogLine(const LogRow& r) {
  std::string s = std::to_string(r.update) + "," + FormatExact(r.lr) + "," +
                  FormatExact(r.objective) + "," + FormatExact(r.kl) + "," +
                  FormatExact(r.ratio_mean) + "," + FormatExact(r.ratio_dev) + "," +
                  FormatExact(r.clip_fraction) + "," + FormatExact(r.value_loss) + ",";
  if (r.eval_metric) s += FormatExact(*r.eval_metric);
  return s;
}

void WriteTrainLog(const std::filesystem::path& path, std::span<const LogRow> rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << TrainLogHeader() << '\n';
  for (const auto& r : rows) out << TrainLogLine(r) << '\n';
}

namespace {

json VecJson(const VectorXd& v) { return json(std::vector<double>(v.begin(), v.end())); }

VectorXd JsonVec(const json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json ParamsJson(const Params& p) {
  return {{"weights", VecJson(p.weights)},
          {"value_weights", VecJson(p.value_weights)},
          {"reference", VecJson(p.reference)}};
}

Params JsonParams(const json& j) {
  Params p;
  p.weights = JsonVec(j.at("weights"));
  p.value_weights = JsonVec(j.at("value_weights"));
  p.reference = JsonVec(j.at("reference"));
  return p;
}

}  // namespace

void SaveParams(const Params& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << ParamsJson(params).dump(1) << '\n';
}

Params LoadParams(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("corrupt parameter file " + path.string());
  try {
    return JsonParams(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("corrupt parameter file: ") + e.what());
  }
}

void SaveCheckpoint(const Checkpoint& c, const TrainConfig& config,
                    const std::filesystem::path& path) {
  json j = {{"update", c.update},
            {"params", ParamsJson(c.params)},
            {"phase_params", ParamsJson(c.phase_params)},
            {"phase_normalizer",
             {{"mean", c.phase_normalizer.mean},
              {"m2", c.phase_normalizer.m2},
              {"count", c.phase_normalizer.count}}},
            {"phase_rng", c.phase_rng},
            {"cursor", c.cursor},
            {"config",
             {{"batch_size", config.batch_size},
              {"total_updates", config.total_updates},
              {"update_epochs", config.update_epochs},
              {"clip_eps", config.clip_eps},
              {"kl_beta", config.kl_beta},
              {"lr_peak", config.lr_peak},
              {"rollout_steps", config.rollout_steps},
              {"seed", config.seed}}}};
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("corrupt checkpoint " + path.string());
  Checkpoint c;
  try {
    c.update = j.at("update").get<int>();
    c.params = JsonParams(j.at("params"));
    c.phase_params = JsonParams(j.at("phase_params"));
    const auto& n = j.at("phase_normalizer");
    c.phase_normalizer.mean = n.at("mean").get<double>();
    c.phase_normalizer.m2 = n.at("m2").get<double>();
    c.phase_normalizer.count = n.at("count").get<long long>();
    c.phase_rng = j.at("phase_rng").get<std::string>();
    c.cursor = j.at("cursor").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("corrupt checkpoint: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Rollouts and the training loop.

std::vector<BufferEntry> CollectRollouts(const EnvFactory& make_env, int pool_size,
                                         const Params& params,
                                         const std::vector<MechanismConfig>& mechanisms,
                                         const TrainConfig& config,
                                         RewardNormalizer& normalizer, Rng& rng) {
  auto subset = SamplePoolSubset(pool_size, std::min(config.subset_size, pool_size), rng);
  const std::uint64_t phase_seed = rng();
  auto policy = MakePolicyAgent(params);
  AgentPtr agent = ApplyMechanisms(policy, mechanisms);

  RunOptions opt;
  opt.render_prompts = false;
  opt.featurize = true;
  opt.temperature = config.train_temperature;
  opt.prompt.legal_actions = config.legal_in_context;
  ApplyPromptMechanisms(mechanisms, opt.prompt);
  const double bonus =
      config.exploration_bonus != 0.0 ? config.exploration_bonus : ExplorationBonus(mechanisms);

  std::vector<std::unique_ptr<Environment>> envs;
  std::vector<Rng> env_rngs, agent_rngs;
  for (std::size_t j = 0; j < subset.size(); ++j) {
    envs.push_back(make_env(subset[j]));
    env_rngs.push_back(SubStream(phase_seed, "env/" + std::to_string(j)));
    agent_rngs.push_back(SubStream(phase_seed, "agent/" + std::to_string(j)));
  }

  struct Episode {
    std::vector<BufferEntry> entries;
    double bootstrap = 0.0;
  };
  std::vector<Episode> episodes;
  int total = 0;
  for (std::size_t j = 0; total < config.rollout_steps; j = (j + 1) % envs.size()) {
    EpisodeResult ep = RunEpisode(*envs[j], *agent, opt, env_rngs[j], agent_rngs[j]);
    Episode out;
    EpisodeState seen(static_cast<int>(envs[j]->labels().size()));
    for (const auto& rec : ep.steps) {
      BufferEntry e;
      e.phi = rec.features->phi;
      e.psi = rec.features->psi;
      e.action = rec.generated;
      if (e.action < 0) {
        e.action = static_cast<int>(std::find(rec.shown_to_env.begin(), rec.shown_to_env.end(),
                                              rec.executed) -
                                    rec.shown_to_env.begin());
      }
      e.old_logprob = PolicyLogProbs<double>(params.weights, e.phi)[e.action];
      e.value = params.value_weights.dot(e.psi);
      e.r_env = rec.r_env;
      e.valid = rec.valid;
      e.episode = static_cast<int>(episodes.size());
      e.step = rec.step;
      if (config.reward_norm) normalizer.Update(rec.r_env);
      double b = ShapeExplorationBonus(0.0, rec.executed, seen, bonus);
      e.reward = ShapeReward(rec.r_env, rec.valid, config.reward_norm ? &normalizer : nullptr,
                             b, config.invalid_penalty);
      out.entries.push_back(std::move(e));
    }
    int room = config.rollout_steps - total;
    if (static_cast<int>(out.entries.size()) > room) {
      out.bootstrap = out.entries[room].value;
      out.entries.resize(room);
    }
    total += static_cast<int>(out.entries.size());
    episodes.push_back(std::move(out));
  }

  if (config.advantage_mode == AdvantageMode::kRewardsToGo) {
    std::vector<std::vector<double>> rewards;
    for (const auto& ep : episodes) {
      std::vector<double> r;
      for (const auto& e : ep.entries) r.push_back(e.reward);
      rewards.push_back(std::move(r));
    }
    auto adv = McAdvantages(rewards);
    for (std::size_t i = 0; i < episodes.size(); ++i) {
      auto rtg = RewardsToGo(rewards[i]);
      for (std::size_t t = 0; t < episodes[i].entries.size(); ++t) {
        episodes[i].entries[t].advantage = adv[i][t];
        episodes[i].entries[t].ret = rtg[t];
      }
    }
  } else {
    for (auto& ep : episodes) {
      std::vector<double> r, v;
      for (const auto& e : ep.entries) {
        r.push_back(e.reward);
        v.push_back(e.value);
      }
      v.push_back(ep.bootstrap);
      auto adv = GaeAdvantages(r, v, config.gamma, config.lambda);
      for (std::size_t t = 0; t < ep.entries.size(); ++t) {
        ep.entries[t].advantage = adv[t];
        ep.entries[t].ret = adv[t] + ep.entries[t].value;
      }
    }
  }

  std::vector<BufferEntry> buffer;
  buffer.reserve(total);
  for (auto& ep : episodes) {
    for (auto& e : ep.entries) buffer.push_back(std::move(e));
  }
  return buffer;
}

TrainResult TrainRlft(const EnvFactory& make_env, int pool_size, const Params& init,
                      const TrainConfig& config,
                      const std::vector<MechanismConfig>& mechanisms, const TrainHooks& hooks,
                      const std::optional<Checkpoint>& resume) {
  config.Validate();
  TrainResult result;
  result.params = init;
  Rng rng = SubStream(config.seed, "trainer");
  RewardNormalizer normalizer;
  int skip = 0;
  std::optional<Params> resumed_phase_params;
  if (resume) {
    result.params = resume->params;
    rng = DeserializeRng(resume->phase_rng);
    normalizer = resume->phase_normalizer;
    skip = resume->cursor;
    result.updates = resume->update;
    resumed_phase_params = resume->phase_params;
  }
  const int limit = hooks.stop_after >= 0 ? std::min(hooks.stop_after, config.total_updates)
                                          : config.total_updates;

  while (result.updates < limit) {
    const std::string phase_rng = SerializeRng(rng);
    const RewardNormalizer phase_normalizer = normalizer;
    const Params phase_params = resumed_phase_params ? *resumed_phase_params : result.params;
    resumed_phase_params.reset();
    auto buffer = CollectRollouts(make_env, pool_size, phase_params, mechanisms, config,
                                  normalizer, rng);
    ++result.phases;

    int cursor = 0;
    std::vector<int> order(buffer.size());
    for (int epoch = 0; epoch < config.update_epochs && result.updates < limit; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size() && result.updates < limit;
           start += config.batch_size) {
        ++cursor;
        if (cursor <= skip) continue;
        std::size_t end = std::min(order.size(), start + config.batch_size);
        std::vector<BufferEntry> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) batch.push_back(buffer[order[i]]);
        if (config.normalize_advantages) {
          std::vector<double> adv;
          for (const auto& e : batch) adv.push_back(e.advantage);
          NormalizeAdvantages(adv);
          for (std::size_t i = 0; i < batch.size(); ++i) batch[i].advantage = adv[i];
        }
        ObjectiveResult obj = BatchObjective(result.params, batch, config);
        if (obj.ratio_dev > config.divergence_threshold) {
          throw DivergenceError("training diverged at update " + std::to_string(result.updates) +
                                ": mean |ratio - 1| = " + FormatExact(obj.ratio_dev) +
                                ", kl = " + FormatExact(obj.kl));
        }
        VectorXd g = obj.grad;
        double norm = g.norm();
        if (norm > config.grad_clip) g *= config.grad_clip / norm;
        double lr = LearningRate(result.updates, config);
        VectorXd flat = FlattenParams(result.params) + lr * g;
        UnflattenParams(flat, result.params);
        if (!flat.allFinite()) throw DivergenceError("parameters became non-finite");
        ++result.updates;

        LogRow row{result.updates, lr,           obj.objective,     obj.kl, obj.ratio_mean,
                   obj.ratio_dev,  obj.clip_fraction, obj.value_loss, std::nullopt};
        bool at_eval = result.updates % config.eval_every == 0 ||
                       result.updates == config.total_updates;
        if (at_eval) {
          if (hooks.evaluate) row.eval_metric = hooks.evaluate(result.params);
          if (hooks.on_checkpoint) {
            hooks.on_checkpoint(Checkpoint{result.updates, result.params, phase_params,
                                           phase_normalizer, phase_rng, cursor});
          }
        }
        result.log.push_back(row);
      }
    }
    skip = 0;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Supervised imitation.

double SftLoss(const VectorXd& weights, std::span<const SftExample> data) {
  if (data.empty()) throw ConfigError("SFT dataset is empty");
  double loss = 0.0;
  for (const auto& ex : data) loss -= PolicyLogProbs<double>(weights, ex.phi)[ex.action];
  return loss / static_cast<double>(data.size());
}

VectorXd SftGrad(const VectorXd& weights, std::span<const SftExample> data) {
  if (data.empty()) throw ConfigError("SFT dataset is empty");
  VectorXd g = VectorXd::Zero(weights.size());
  for (const auto& ex : data) g -= PolicyLogProbGrad<double>(weights, ex.phi, ex.action);
  return g / static_cast<double>(data.size());
}

SftResult TrainSft(std::span<const SftExample> data, const Params& init,
                   const SftConfig& config) {
  if (data.empty()) throw ConfigError("SFT dataset is empty");
  for (const auto& ex : data) {
    if (ex.action < 0 || ex.action >= ex.phi.rows()) {
      throw ConfigError("SFT example action out of range");
    }
  }
  SftResult res;
  res.params = init;
  Rng rng = SubStream(config.seed, "sft");
  std::vector<SftExample> mini;
  for (int step = 0; step < config.steps; ++step) {
    std::span<const SftExample> batch = data;
    if (config.batch_size > 0 && config.batch_size < static_cast<int>(data.size())) {
      mini.clear();
      for (int i = 0; i < config.batch_size; ++i) {
        mini.push_back(data[UniformIndex(rng, static_cast<int>(data.size()))]);
      }
      batch = mini;
    }
    res.losses.push_back(SftLoss(res.params.weights, batch));
    VectorXd g = SftGrad(res.params.weights, batch);
    double norm = g.norm();
    if (config.grad_clip > 0.0 && norm > config.grad_clip) g *= config.grad_clip / norm;
    res.params.weights -= config.lr * g;
  }
  return res;
}

}  // namespace lmdecide
