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

#include "lmdecide/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <json.hpp>
#include <set>
#include <sstream>

#include "lmdecide/baselines.hpp"

namespace lmdecide {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string>& KnownAgents() {
  static const std::set<std::string> kAgents = {
      "random", "ucb",    "ucb-unit",    "linucb",    "mcts",     "copycat",
      "greedy", "policy", "policy-zero", "kd-oracle", "kd-greedy", "remote"};
  return kAgents;
}

// Strict reader: every key of the object must be consumed.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  template <typename T>
  void Get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* Sub(const char* key) {
    if (!j_.contains(key)) return nullptr;
    used_.insert(key);
    return &j_.at(key);
  }

  void Finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError("unknown key '" + where_ + "." + k + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

json TrainJson(const TrainConfig& t) {
  return {{"batch_size", t.batch_size},
          {"total_updates", t.total_updates},
          {"update_epochs", t.update_epochs},
          {"clip_eps", t.clip_eps},
          {"kl_beta", t.kl_beta},
          {"lr_peak", t.lr_peak},
          {"lr_final", t.lr_final},
          {"warmup_steps", t.warmup_steps},
          {"grad_clip", t.grad_clip},
          {"reward_norm", t.reward_norm},
          {"normalize_advantages", t.normalize_advantages},
          {"advantage_mode", t.advantage_mode == AdvantageMode::kGae ? "gae" : "rtg"},
          {"gamma", t.gamma},
          {"lambda", t.lambda},
          {"value_coef", t.value_coef},
          {"rollout_steps", t.rollout_steps},
          {"subset_size", t.subset_size},
          {"eval_every", t.eval_every},
          {"invalid_penalty", t.invalid_penalty},
          {"exploration_bonus", t.exploration_bonus},
          {"train_temperature", t.train_temperature},
          {"divergence_threshold", t.divergence_threshold},
          {"legal_in_context", t.legal_in_context}};
}

TrainConfig TrainFromJson(const json& j) {
  TrainConfig t;
  Reader r(j, "train");
  r.Get("batch_size", t.batch_size);
  r.Get("total_updates", t.total_updates);
  r.Get("update_epochs", t.update_epochs);
  r.Get("clip_eps", t.clip_eps);
  r.Get("kl_beta", t.kl_beta);
  r.Get("lr_peak", t.lr_peak);
  r.Get("lr_final", t.lr_final);
  r.Get("warmup_steps", t.warmup_steps);
  r.Get("grad_clip", t.grad_clip);
  r.Get("reward_norm", t.reward_norm);
  r.Get("normalize_advantages", t.normalize_advantages);
  std::string mode = "rtg";
  r.Get("advantage_mode", mode);
  if (mode == "gae") {
    t.advantage_mode = AdvantageMode::kGae;
  } else if (mode == "rtg") {
    t.advantage_mode = AdvantageMode::kRewardsToGo;
  } else {
    throw ConfigError("advantage_mode must be rtg or gae");
  }
  r.Get("gamma", t.gamma);
  r.Get("lambda", t.lambda);
  r.Get("value_coef", t.value_coef);
  r.Get("rollout_steps", t.rollout_steps);
  r.Get("subset_size", t.subset_size);
  r.Get("eval_every", t.eval_every);
  r.Get("invalid_penalty", t.invalid_penalty);
  r.Get("exploration_bonus", t.exploration_bonus);
  r.Get("train_temperature", t.train_temperature);
  r.Get("divergence_threshold", t.divergence_threshold);
  r.Get("legal_in_context", t.legal_in_context);
  r.Finish();
  return t;
}

json MechanismJson(const MechanismConfig& m) {
  return {{"kind", std::string(ToString(m.kind))},
          {"epsilon", m.epsilon},
          {"n_consistency", m.n_consistency},
          {"bonus", m.bonus}};
}

MechanismConfig MechanismFromJson(const json& j) {
  MechanismConfig m;
  if (j.is_string()) {
    m.kind = ParseMechanismKind(j.get<std::string>());
    return m;
  }
  Reader r(j, "mechanisms[]");
  std::string kind;
  r.Get("kind", kind);
  m.kind = ParseMechanismKind(kind);
  r.Get("epsilon", m.epsilon);
  r.Get("n_consistency", m.n_consistency);
  r.Get("bonus", m.bonus);
  r.Finish();
  return m;
}

fs::path OutDir(const ExperimentConfig& c) { return fs::path(c.output_dir); }

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string SeedDir(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

}  // namespace

// ---------------------------------------------------------------------------
// Config.

void ExperimentConfig::Validate() const {
  EnvPreset preset = ParseEnvPreset(env);
  if (!KnownAgents().count(agent)) throw ConfigError("unknown agent '" + agent + "'");
  const bool mab = preset.family == EnvFamily::kMab;
  const bool ttt = preset.family == EnvFamily::kTicTacToe;
  if (agent == "mcts" && !ttt) throw ConfigError("mcts needs a tic-tac-toe environment");
  if (agent == "linucb" && preset.family != EnvFamily::kContextual) {
    throw ConfigError("linucb needs a contextual environment");
  }
  if ((agent == "ucb" || agent == "ucb-unit" || agent == "copycat" || agent == "greedy") &&
      ttt) {
    throw ConfigError(agent + " does not play tic-tac-toe");
  }
  if ((agent == "kd-oracle" || agent == "kd-greedy") && !mab) {
    throw ConfigError(agent + " needs a mab environment");
  }
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (budgets.empty()) throw ConfigError("at least one budget is required");
  for (int b : budgets) {
    if (b < 1) throw ConfigError("budgets must be >= 1");
  }
  if (instances < 1 || pool_size < 1 || eval_instances < 1) {
    throw ConfigError("instances, pool_size and eval_instances must be >= 1");
  }
  if (mcts_simulations < 1) throw ConfigError("mcts_simulations must be >= 1");
  if (prompt.context_budget < 1) throw ConfigError("context budget must be >= 1");
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
  for (const auto& m : mechanisms) m.Validate();
  if (train) train->Validate();
  if (train_kind != "rlft" && train_kind != "sft") {
    throw ConfigError("train_kind must be rlft or sft");
  }
  if (train_kind == "sft" && !mab) throw ConfigError("sft expert data needs a mab environment");
  if (expert_rollouts < 1 || sft.steps < 0 || !(sft.lr > 0.0)) {
    throw ConfigError("invalid sft settings");
  }
  if (!resume_from.empty() && seeds.size() != 1) {
    throw ConfigError("resuming needs exactly one seed");
  }
  for (const auto& p : probes) {
    if (p != "coverage" && p != "frequency" && p != "knowdo") {
      throw ConfigError("unknown probe '" + p + "'");
    }
    if (!mab) throw ConfigError("probes need a mab environment");
  }
  if (frequency.targets < 1 || frequency.bases < 1 || frequency.max_reps < 0 ||
      frequency.min_base < 2 || frequency.max_base < frequency.min_base ||
      frequency.samples < 1) {
    throw ConfigError("invalid frequency probe settings");
  }
  ParseEnvPreset(frequency.preset);
}

std::string ConfigToJson(const ExperimentConfig& c) {
  json mech = json::array();
  for (const auto& m : c.mechanisms) mech.push_back(MechanismJson(m));
  json j = {
      {"env", c.env},
      {"agent", c.agent},
      {"mechanisms", mech},
      {"train_kind", c.train_kind},
      {"sft",
       {{"steps", c.sft.steps},
        {"lr", c.sft.lr},
        {"batch_size", c.sft.batch_size},
        {"grad_clip", c.sft.grad_clip}}},
      {"expert_rollouts", c.expert_rollouts},
      {"probes", c.probes},
      {"frequency",
       {{"preset", c.frequency.preset},
        {"targets", c.frequency.targets},
        {"bases", c.frequency.bases},
        {"max_reps", c.frequency.max_reps},
        {"min_base", c.frequency.min_base},
        {"max_base", c.frequency.max_base},
        {"mode", c.frequency.mode == DistributionMode::kExact ? "exact" : "sampled"},
        {"samples", c.frequency.samples},
        {"temperature", c.frequency.temperature},
        {"cot", c.frequency.cot},
        {"budget", c.frequency.budget}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
      {"prompt",
       {{"cot", c.prompt.cot},
        {"legal_actions", c.prompt.legal_actions},
        {"summary", c.prompt.summary},
        {"randomize", c.prompt.randomize},
        {"context_budget", c.prompt.context_budget}}},
      {"budgets", c.budgets},
      {"instances", c.instances},
      {"pool_size", c.pool_size},
      {"window", c.window},
      {"temperature", c.temperature},
      {"mcts_simulations", c.mcts_simulations},
      {"agent_first", c.agent_first},
      {"params_path", c.params_path},
      {"resume_from", c.resume_from},
      {"eval_instances", c.eval_instances},
      {"transcripts", c.transcripts}};
  if (c.train) j["train"] = TrainJson(*c.train);
  return j.dump(2) + "\n";
}

ExperimentConfig ConfigFromJson(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  ExperimentConfig c;
  Reader r(j, "config");
  r.Get("env", c.env);
  r.Get("agent", c.agent);
  if (const json* m = r.Sub("mechanisms")) {
    if (m->is_string()) {
      c.mechanisms = ParseMechanisms(m->get<std::string>(), 0.1, 16, 1.0);
    } else if (m->is_array()) {
      for (const auto& e : *m) c.mechanisms.push_back(MechanismFromJson(e));
    } else {
      throw ConfigError("mechanisms must be a list");
    }
  }
  if (const json* t = r.Sub("train")) c.train = TrainFromJson(*t);
  r.Get("train_kind", c.train_kind);
  if (const json* s = r.Sub("sft")) {
    Reader sr(*s, "sft");
    sr.Get("steps", c.sft.steps);
    sr.Get("lr", c.sft.lr);
    sr.Get("batch_size", c.sft.batch_size);
    sr.Get("grad_clip", c.sft.grad_clip);
    sr.Finish();
  }
  r.Get("expert_rollouts", c.expert_rollouts);
  r.Get("probes", c.probes);
  if (const json* f = r.Sub("frequency")) {
    Reader fr(*f, "frequency");
    fr.Get("preset", c.frequency.preset);
    fr.Get("targets", c.frequency.targets);
    fr.Get("bases", c.frequency.bases);
    fr.Get("max_reps", c.frequency.max_reps);
    fr.Get("min_base", c.frequency.min_base);
    fr.Get("max_base", c.frequency.max_base);
    std::string mode = "exact";
    fr.Get("mode", mode);
    if (mode != "exact" && mode != "sampled") throw ConfigError("mode must be exact or sampled");
    c.frequency.mode = mode == "exact" ? DistributionMode::kExact : DistributionMode::kSampled;
    fr.Get("samples", c.frequency.samples);
    fr.Get("temperature", c.frequency.temperature);
    fr.Get("cot", c.frequency.cot);
    fr.Get("budget", c.frequency.budget);
    fr.Finish();
  }
  r.Get("seeds", c.seeds);
  r.Get("output_dir", c.output_dir);
  if (const json* p = r.Sub("prompt")) {
    Reader pr(*p, "prompt");
    pr.Get("cot", c.prompt.cot);
    pr.Get("legal_actions", c.prompt.legal_actions);
    pr.Get("summary", c.prompt.summary);
    pr.Get("randomize", c.prompt.randomize);
    pr.Get("context_budget", c.prompt.context_budget);
    pr.Finish();
  }
  r.Get("budgets", c.budgets);
  r.Get("instances", c.instances);
  r.Get("pool_size", c.pool_size);
  r.Get("window", c.window);
  r.Get("temperature", c.temperature);
  r.Get("mcts_simulations", c.mcts_simulations);
  r.Get("agent_first", c.agent_first);
  r.Get("params_path", c.params_path);
  r.Get("resume_from", c.resume_from);
  r.Get("eval_instances", c.eval_instances);
  r.Get("transcripts", c.transcripts);
  r.Finish();
  return c;
}

ExperimentConfig LoadConfig(const fs::path& path) { return ConfigFromJson(ReadText(path)); }

// ---------------------------------------------------------------------------
// Agents.

AgentPtr MakeAgent(const ExperimentConfig& c, const AgentDeps& deps) {
  AgentPtr a;
  const std::string& id = c.agent;
  if (id == "random") {
    a = MakeRandomAgent();
  } else if (id == "ucb") {
    a = MakeUcbAgent(UcbVariant::kStandard);
  } else if (id == "ucb-unit") {
    a = MakeUcbAgent(UcbVariant::kUnitBonus);
  } else if (id == "linucb") {
    a = MakeLinUcbAgent();
  } else if (id == "mcts") {
    MctsConfig m;
    m.simulations = c.mcts_simulations;
    a = MakeMctsAgent(m);
  } else if (id == "copycat") {
    a = MakeScriptedAgent(ScriptedKind::kCopycat);
  } else if (id == "greedy") {
    a = MakeScriptedAgent(ScriptedKind::kGreedyMean);
  } else if (id == "policy" || id == "policy-zero") {
    Params p = !c.params_path.empty() ? LoadParams(c.params_path)
               : id == "policy"       ? GreedyPriorParams()
                                      : Params::Zero();
    a = MakePolicyAgent(p);
  } else if (id == "kd-oracle" || id == "kd-greedy") {
    a = MakeUcbTranscriptAgent(id == "kd-greedy");
  } else if (id == "remote") {
    RemoteConfig rc;
    if (deps.transport) {
      if (const char* e = std::getenv("LMDECIDE_ENDPOINT"); e && *e) rc = RemoteConfig::FromEnv();
    } else {
      rc = RemoteConfig::FromEnv();
    }
    a = std::make_shared<RemoteAgent>(rc, deps.transport ? deps.transport : DefaultHttpTransport(),
                                      deps.transcript);
  } else {
    throw ConfigError("unknown agent '" + id + "'");
  }
  return ApplyMechanisms(a, c.mechanisms);
}

Interval ConfidenceInterval(std::span<const double> v) {
  Interval ci;
  if (v.empty()) return ci;
  const double n = static_cast<double>(v.size());
  for (double x : v) ci.mean += x;
  ci.mean /= n;
  ci.low = ci.high = ci.mean;
  if (v.size() < 2) return ci;
  double ss = 0.0;
  for (double x : v) ss += (x - ci.mean) * (x - ci.mean);
  double se = std::sqrt(ss / (n - 1.0) / n);
  ci.low = ci.mean - 1.96 * se;
  ci.high = ci.mean + 1.96 * se;
  return ci;
}

// ---------------------------------------------------------------------------
// Evaluation.

namespace {

// Environments of one seed, built lazily by index.
class EnvSet {
 public:
  EnvSet(const ExperimentConfig& c, std::uint64_t seed, int count, std::string_view tag)
      : config_(c), preset_(ParseEnvPreset(c.env)) {
    if (preset_.family == EnvFamily::kMab) {
      pool_ = MakePool(preset_, count, SubSeed(seed, std::string(tag) + "/pool"));
    } else if (preset_.family == EnvFamily::kContextual) {
      contextual_ = std::make_shared<const ContextualInstance>(MakeContextual(
          preset_.k, 10000, 0.1, SubSeed(seed, std::string(tag) + "/cb"), preset_.horizon));
    }
  }

  std::unique_ptr<Environment> Make(int i) const {
    switch (preset_.family) {
      case EnvFamily::kMab: return std::make_unique<BanditEnv>(pool_.instances[i]);
      case EnvFamily::kContextual: return std::make_unique<ContextualEnv>(contextual_);
      case EnvFamily::kTicTacToe: {
        MctsConfig m;
        m.simulations = config_.mcts_simulations;
        return std::make_unique<TicTacToeEnv>(ParseOpponent(preset_.opponent), m,
                                              config_.agent_first);
      }
    }
    throw ConfigError("unknown environment family");
  }

  const EnvPreset& preset() const { return preset_; }

 private:
  const ExperimentConfig& config_;
  EnvPreset preset_;
  BanditPool pool_;
  std::shared_ptr<const ContextualInstance> contextual_;
};

RunOptions MakeRunOptions(const ExperimentConfig& c, int budget) {
  RunOptions opt;
  opt.prompt = c.prompt;
  ApplyPromptMechanisms(c.mechanisms, opt.prompt);
  opt.window = c.window;
  opt.budget = budget;
  opt.temperature = c.temperature;
  opt.render_prompts = c.agent == "remote" || c.transcripts;
  return opt;
}

struct SeedOutcome {
  std::vector<double> regret;
  std::vector<double> coverage;
  double ret = 0.0, win = 0.0, draw = 0.0, loss = 0.0;
  long long invalid = 0, steps = 0;
  int failed = 0;
  std::vector<std::string> transcript;
};

SeedOutcome EvalSeed(const ExperimentConfig& c, std::uint64_t seed, int budget,
                     const AgentDeps& deps) {
  SeedOutcome out;
  AgentPtr agent = MakeAgent(c, deps);
  EnvSet envs(c, seed, c.instances, "eval");
  RunOptions opt = MakeRunOptions(c, budget);
  std::vector<std::vector<double>> regrets, coverages;
  int ok = 0;
  for (int i = 0; i < c.instances; ++i) {
    auto env = envs.Make(i);
    Rng env_rng = SubStream(seed, "eval/env/" + std::to_string(i));
    Rng agent_rng = SubStream(seed, "eval/agent/" + std::to_string(i));
    EpisodeResult ep;
    try {
      ep = RunEpisode(*env, *agent, opt, env_rng, agent_rng);
    } catch (const TransportError&) {
      ++out.failed;
      continue;
    }
    ++ok;
    regrets.push_back(ep.cumulative_regret);
    coverages.push_back(ep.coverage);
    out.ret += ep.total_reward;
    if (ep.outcome) {
      out.win += ep.outcome->result == GameResult::kWin;
      out.draw += ep.outcome->result == GameResult::kDraw;
      out.loss += ep.outcome->result == GameResult::kLoss;
    }
    out.invalid += ep.invalid_count;
    out.steps += static_cast<long long>(ep.steps.size());
    if (c.transcripts) {
      for (const auto& s : ep.steps) {
        json line = {{"seed", seed},          {"instance", i},
                     {"step", s.step},        {"prompt", s.prompt},
                     {"reply", s.reply.raw_text}, {"executed", s.executed},
                     {"valid", s.valid},      {"reward", s.r_env}};
        out.transcript.push_back(line.dump());
      }
    }
  }
  if (ok > 0) {
    out.ret /= ok;
    out.win /= ok;
    out.draw /= ok;
    out.loss /= ok;
  }
  std::size_t width = 0;
  for (const auto& r : regrets) width = std::max(width, r.size());
  out.regret.assign(width, 0.0);
  out.coverage.assign(width, 0.0);
  for (std::size_t k = 0; k < regrets.size(); ++k) {
    for (std::size_t t = 0; t < width; ++t) {
      const auto& r = regrets[k];
      const auto& cv = coverages[k];
      out.regret[t] += r.empty() ? 0.0 : r[std::min(t, r.size() - 1)];
      out.coverage[t] += cv.empty() ? 0.0 : cv[std::min(t, cv.size() - 1)];
    }
  }
  for (std::size_t t = 0; t < width; ++t) {
    out.regret[t] /= ok;
    out.coverage[t] /= ok;
  }
  return out;
}

std::string IntervalRow(const std::string& key, const Interval& ci) {
  return key + "," + FormatExact(ci.mean) + "," + FormatExact(ci.low) + "," +
         FormatExact(ci.high) + "\n";
}

EvalSummary EvalBudget(const ExperimentConfig& c, int budget, const AgentDeps& deps,
                       const fs::path& dir) {
  std::vector<std::future<SeedOutcome>> futures;
  for (auto seed : c.seeds) {
    futures.push_back(std::async(std::launch::async, [&c, seed, budget, &deps] {
      return EvalSeed(c, seed, budget, deps);
    }));
  }
  std::vector<SeedOutcome> seeds;
  for (auto& f : futures) seeds.push_back(f.get());

  EvalSummary s;
  s.agent = c.agent;
  s.env = c.env;
  s.budget = budget;
  s.seeds = static_cast<int>(seeds.size());
  std::size_t width = 0;
  for (const auto& o : seeds) width = std::max(width, o.regret.size());
  const bool ttt = ParseEnvPreset(c.env).family == EnvFamily::kTicTacToe;
  if (!ttt) {
    for (std::size_t t = 0; t < width; ++t) {
      std::vector<double> r, cv;
      for (const auto& o : seeds) {
        if (t < o.regret.size()) {
          r.push_back(o.regret[t]);
          cv.push_back(o.coverage[t]);
        }
      }
      s.regret.push_back(ConfidenceInterval(r));
      s.coverage.push_back(ConfidenceInterval(cv));
    }
  }
  std::vector<double> ret, win, draw, loss;
  long long invalid = 0, steps = 0;
  for (const auto& o : seeds) {
    ret.push_back(o.ret);
    win.push_back(o.win);
    draw.push_back(o.draw);
    loss.push_back(o.loss);
    invalid += o.invalid;
    steps += o.steps;
    s.failed_instances += o.failed;
  }
  if (ttt) {
    s.game["return"] = ConfidenceInterval(ret);
    s.game["win"] = ConfidenceInterval(win);
    s.game["draw"] = ConfidenceInterval(draw);
    s.game["loss"] = ConfidenceInterval(loss);
  }
  s.invalid_rate = steps > 0 ? static_cast<double>(invalid) / static_cast<double>(steps) : 0.0;
  s.partial = s.failed_instances > 0;

  if (!dir.empty()) {
    fs::create_directories(dir);
    WriteText(dir / "config.json", ConfigToJson(c));
    std::string metrics;
    if (ttt) {
      metrics = "metric,mean,ci_low,ci_high\n";
      for (const char* k : {"return", "win", "draw", "loss"}) metrics += IntervalRow(k, s.game[k]);
    } else {
      metrics = "step,mean,ci_low,ci_high\n";
      std::string cov = "step,mean_coverage,ci_low,ci_high\n";
      for (std::size_t t = 0; t < s.regret.size(); ++t) {
        metrics += IntervalRow(std::to_string(t + 1), s.regret[t]);
        cov += IntervalRow(std::to_string(t + 1), s.coverage[t]);
      }
      WriteText(dir / "coverage.csv", cov);
    }
    WriteText(dir / "metrics.csv", metrics);
    WriteText(dir / "summary.json", EvalSummaryJson(s));
    if (c.transcripts) {
      std::string lines;
      for (const auto& o : seeds) {
        for (const auto& l : o.transcript) lines += l + "\n";
      }
      WriteText(dir / "transcripts.jsonl", lines);
    }
  }
  return s;
}

}  // namespace

std::vector<EvalSummary> RunEval(const ExperimentConfig& config, const AgentDeps& deps) {
  config.Validate();
  std::vector<EvalSummary> out;
  for (int b : config.budgets) {
    fs::path dir = OutDir(config);
    if (!dir.empty() && config.budgets.size() > 1) dir /= "G" + std::to_string(b);
    out.push_back(EvalBudget(config, b, deps, dir));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training.

double EvaluatePolicy(const ExperimentConfig& c, const Params& params, std::uint64_t seed) {
  EnvSet envs(c, seed, c.eval_instances, "policy-eval");
  AgentPtr agent = MakePolicyAgent(params);
  std::vector<MechanismConfig> mechs;
  for (const auto& m : c.mechanisms) {
    if (m.kind != MechanismKind::kExplorationBonus) mechs.push_back(m);
  }
  agent = ApplyMechanisms(agent, mechs);
  RunOptions opt;
  opt.prompt = c.prompt;
  opt.render_prompts = false;
  opt.temperature = 0.0;
  const bool ttt = envs.preset().family == EnvFamily::kTicTacToe;
  double total = 0.0;
  for (int i = 0; i < c.eval_instances; ++i) {
    auto env = envs.Make(i);
    Rng env_rng = SubStream(seed, "policy-eval/env/" + std::to_string(i));
    Rng agent_rng = SubStream(seed, "policy-eval/agent/" + std::to_string(i));
    EpisodeResult ep = RunEpisode(*env, *agent, opt, env_rng, agent_rng);
    if (ttt) {
      total += ep.total_reward;
    } else {
      total += ep.cumulative_regret.empty() ? 0.0 : ep.cumulative_regret.back();
    }
  }
  return total / c.eval_instances;
}

TrainingArtifacts RunTraining(const ExperimentConfig& config) {
  config.Validate();
  TrainingArtifacts art;
  Params init = !config.params_path.empty() ? LoadParams(config.params_path)
                : config.agent == "policy-zero" ? Params::Zero()
                                                : GreedyPriorParams();
  const fs::path root = OutDir(config);
  if (!root.empty()) {
    fs::create_directories(root);
    WriteText(root / "config.json", ConfigToJson(config));
  }

  if (config.train_kind == "sft") {
    std::vector<std::future<SftResult>> futures;
    for (auto seed : config.seeds) {
      futures.push_back(std::async(std::launch::async, [&, seed] {
        ExpertConfig ec;
        ec.preset = config.env;
        ec.n_rollouts = config.expert_rollouts;
        ec.seed = SubSeed(seed, "expert");
        auto data = ExpertSftExamples(ec);
        SftConfig sc = config.sft;
        sc.seed = seed;
        return TrainSft(data, init, sc);
      }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) {
      art.sft.push_back(futures[i].get());
      if (root.empty()) continue;
      fs::path dir = root / SeedDir(config.seeds[i]);
      fs::create_directories(dir);
      std::string csv = "step,loss\n";
      for (std::size_t t = 0; t < art.sft.back().losses.size(); ++t) {
        csv += std::to_string(t) + "," + FormatExact(art.sft.back().losses[t]) + "\n";
      }
      WriteText(dir / "sft_loss.csv", csv);
      SaveParams(art.sft.back().params, dir / "params.json");
    }
    return art;
  }

  if (!config.train) throw ConfigError("train-rlft needs a train section");
  std::optional<Checkpoint> resume;
  if (!config.resume_from.empty()) resume = LoadCheckpoint(config.resume_from);

  std::vector<std::future<TrainResult>> futures;
  for (auto seed : config.seeds) {
    futures.push_back(std::async(std::launch::async, [&, seed] {
      TrainConfig tc = *config.train;
      tc.seed = seed;
      EnvSet envs(config, seed, config.pool_size, "train");
      EnvFactory factory = [&envs](int i) { return envs.Make(i); };
      fs::path dir = root.empty() ? fs::path() : root / SeedDir(seed);
      if (!dir.empty()) fs::create_directories(dir);
      TrainHooks hooks;
      hooks.evaluate = [&config, seed](const Params& p) {
        return EvaluatePolicy(config, p, seed);
      };
      if (!dir.empty()) {
        hooks.on_checkpoint = [dir, tc](const Checkpoint& ck) {
          SaveCheckpoint(ck, tc, dir / ("ckpt_" + std::to_string(ck.update) + ".json"));
        };
      }
      TrainResult res = TrainRlft(factory, config.pool_size, init, tc, config.mechanisms,
                                  hooks, resume);
      if (!dir.empty()) {
        WriteTrainLog(dir / "train_log.csv", res.log);
        SaveParams(res.params, dir / "params.json");
      }
      return res;
    }));
  }
  for (auto& f : futures) art.rlft.push_back(f.get());
  return art;
}

// ---------------------------------------------------------------------------
// Probes.

ProbeArtifacts RunProbes(const ExperimentConfig& config, const AgentDeps& deps) {
  config.Validate();
  ProbeArtifacts art;
  const fs::path root = OutDir(config);
  EnvPreset preset = ParseEnvPreset(config.env);
  for (auto seed : config.seeds) {
    AgentPtr agent = MakeAgent(config, deps);
    BanditPool pool = MakePool(preset, config.instances, SubSeed(seed, "probe/pool"));
    fs::path dir = root.empty() ? fs::path() : root / SeedDir(seed);
    auto save = [&](const std::string& name, const std::string& report) {
      if (dir.empty()) return;
      json j = json::parse(report);
      j["seed"] = seed;
      j["config"] = json::parse(ConfigToJson(config));
      WriteText(dir / name, j.dump(1) + "\n");
    };
    for (const auto& p : config.probes) {
      if (p == "coverage") {
        RunOptions opt = MakeRunOptions(config, config.budgets.front());
        art.coverage.push_back(ProbeCoverage(*agent, pool.instances, opt, seed));
        save("coverage_report.json", CoverageReportJson(art.coverage.back()));
      } else if (p == "frequency") {
        FrequencyConfig f = config.frequency;
        f.seed = seed;
        art.frequency.push_back(ProbeFrequencyBias(*agent, f));
        save("frequency_report.json", FrequencyReportJson(art.frequency.back()));
      } else if (p == "knowdo") {
        art.knowdo.push_back(
            ProbeKnowingDoing(*agent, pool.instances, config.budgets.front(), seed));
        save("knowdo_report.json", KnowingDoingJson(art.knowdo.back()));
      }
    }
  }
  return art;
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

std::string_view CategoryName(BiasCategory c) {
  switch (c) {
    case BiasCategory::kFrequent: return "frequent";
    case BiasCategory::kGreedy: return "greedy";
    case BiasCategory::kOther: return "other";
  }
  return "other";
}

BiasCategory CategoryFromName(const std::string& s) {
  if (s == "frequent") return BiasCategory::kFrequent;
  if (s == "greedy") return BiasCategory::kGreedy;
  return BiasCategory::kOther;
}

json FractionsJson(const BiasFractions& f) {
  return {{"frequent", f.frequent}, {"greedy", f.greedy}, {"other", f.other}, {"count", f.count}};
}

BiasFractions FractionsFromJson(const json& j) {
  BiasFractions f;
  f.frequent = j.at("frequent").get<double>();
  f.greedy = j.at("greedy").get<double>();
  f.other = j.at("other").get<double>();
  f.count = j.at("count").get<int>();
  return f;
}

json IntervalJson(const Interval& i) { return json::array({i.mean, i.low, i.high}); }

Interval IntervalFromJson(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json ParseReport(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("malformed report JSON");
  return j;
}

template <typename Fn>
auto Guard(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
}

}  // namespace

std::string CoverageReportJson(const CoverageReport& r) {
  json j = {{"kind", "coverage"},
            {"num_arms", r.num_arms},
            {"instances", r.instances},
            {"mean_coverage", r.mean_coverage},
            {"coverage_se", r.coverage_se},
            {"mean_regret", r.mean_regret},
            {"regret_se", r.regret_se},
            {"histogram", r.histogram}};
  return j.dump();
}

CoverageReport CoverageReportFromJson(const std::string& text) {
  json j = ParseReport(text);
  return Guard([&] {
    CoverageReport r;
    r.num_arms = j.at("num_arms").get<int>();
    r.instances = j.at("instances").get<int>();
    r.mean_coverage = j.at("mean_coverage").get<std::vector<double>>();
    r.coverage_se = j.at("coverage_se").get<std::vector<double>>();
    r.mean_regret = j.at("mean_regret").get<std::vector<double>>();
    r.regret_se = j.at("regret_se").get<std::vector<double>>();
    r.histogram = j.at("histogram").get<std::vector<long long>>();
    return r;
  });
}

std::string FrequencyReportJson(const FrequencyBiasReport& r) {
  json probes = json::array();
  for (const auto& p : r.probes) {
    probes.push_back({{"target", p.target},
                      {"base", p.base},
                      {"reps", p.reps},
                      {"entropy", p.entropy},
                      {"predicted", p.predicted},
                      {"frequent", p.frequent},
                      {"greedy", p.greedy},
                      {"category", std::string(CategoryName(p.category))}});
  }
  json buckets = json::array();
  for (const auto& b : r.buckets) buckets.push_back(FractionsJson(b));
  json j = {{"kind", "frequency"},      {"num_arms", r.num_arms},
            {"invalid", r.invalid},     {"windows", r.windows},
            {"probes", probes},         {"overall", FractionsJson(r.overall)},
            {"buckets", buckets}};
  return j.dump();
}

FrequencyBiasReport FrequencyReportFromJson(const std::string& text) {
  json j = ParseReport(text);
  return Guard([&] {
    FrequencyBiasReport r;
    r.num_arms = j.at("num_arms").get<int>();
    r.invalid = j.at("invalid").get<int>();
    r.windows = j.at("windows").get<std::vector<std::pair<int, int>>>();
    for (const auto& p : j.at("probes")) {
      FrequencyProbe q;
      q.target = p.at("target").get<int>();
      q.base = p.at("base").get<int>();
      q.reps = p.at("reps").get<int>();
      q.entropy = p.at("entropy").get<double>();
      q.predicted = p.at("predicted").get<int>();
      q.frequent = p.at("frequent").get<int>();
      q.greedy = p.at("greedy").get<int>();
      q.category = CategoryFromName(p.at("category").get<std::string>());
      r.probes.push_back(q);
    }
    r.overall = FractionsFromJson(j.at("overall"));
    for (const auto& b : j.at("buckets")) r.buckets.push_back(FractionsFromJson(b));
    return r;
  });
}

std::string KnowingDoingJson(const KnowingDoingReport& r) {
  json counts = json::array();
  for (const auto& row : r.counts) counts.push_back({row[0], row[1], row[2]});
  json j = {{"kind", "knowdo"},
            {"counts", counts},
            {"steps", r.steps},
            {"invalid", r.invalid},
            {"ties", r.ties},
            {"failed_instances", r.failed_instances}};
  return j.dump();
}

KnowingDoingReport KnowingDoingFromJson(const std::string& text) {
  json j = ParseReport(text);
  return Guard([&] {
    KnowingDoingReport r;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) r.counts[a][b] = j.at("counts").at(a).at(b).get<long long>();
    }
    r.steps = j.at("steps").get<long long>();
    r.invalid = j.at("invalid").get<long long>();
    r.ties = j.at("ties").get<long long>();
    r.failed_instances = j.at("failed_instances").get<int>();
    return r;
  });
}

std::string EvalSummaryJson(const EvalSummary& s) {
  json regret = json::array(), coverage = json::array(), game = json::object();
  for (const auto& i : s.regret) regret.push_back(IntervalJson(i));
  for (const auto& i : s.coverage) coverage.push_back(IntervalJson(i));
  for (const auto& [k, v] : s.game) game[k] = IntervalJson(v);
  json j = {{"kind", "eval"},
            {"agent", s.agent},
            {"env", s.env},
            {"budget", s.budget},
            {"seeds", s.seeds},
            {"regret", regret},
            {"coverage", coverage},
            {"game", game},
            {"invalid_rate", s.invalid_rate},
            {"failed_instances", s.failed_instances},
            {"partial", s.partial}};
  return j.dump(1) + "\n";
}

EvalSummary EvalSummaryFromJson(const std::string& text) {
  json j = ParseReport(text);
  return Guard([&] {
    EvalSummary s;
    s.agent = j.at("agent").get<std::string>();
    s.env = j.at("env").get<std::string>();
    s.budget = j.at("budget").get<int>();
    s.seeds = j.at("seeds").get<int>();
    for (const auto& i : j.at("regret")) s.regret.push_back(IntervalFromJson(i));
    for (const auto& i : j.at("coverage")) s.coverage.push_back(IntervalFromJson(i));
    for (const auto& [k, v] : j.at("game").items()) s.game[k] = IntervalFromJson(v);
    s.invalid_rate = j.at("invalid_rate").get<double>();
    s.failed_instances = j.at("failed_instances").get<int>();
    s.partial = j.at("partial").get<bool>();
    return s;
  });
}

// ---------------------------------------------------------------------------
// Figure data.

std::map<std::string, std::string> EmitFigureData(const FigureInputs& in) {
  std::map<std::string, std::string> b;
  std::string& cov = b["coverage.csv"];
  std::string& pairs = b["coverage_regret.csv"];
  std::string& regret = b["regret.csv"];
  std::string& entropy = b["entropy.csv"];
  std::string& buckets = b["bias_buckets.csv"];
  std::string& kd = b["knowdo.csv"];
  cov = "label,step,mean_coverage,ci_low,ci_high\n";
  pairs = "label,final_coverage,final_regret\n";
  regret = "agent,env,budget,step,mean,ci_low,ci_high\n";
  entropy = "probe,target,base,reps,entropy,category\n";
  buckets = "probe,window,frequent,greedy,other,count\n";
  kd = "probe,knowing,doing,count,fraction\n";

  for (const auto& [label, r] : in.coverage) {
    for (std::size_t t = 0; t < r.mean_coverage.size(); ++t) {
      double m = r.mean_coverage[t];
      double h = 1.96 * r.coverage_se[t];
      cov += label + "," + std::to_string(t + 1) + "," + FormatExact(m) + "," +
             FormatExact(m - h) + "," + FormatExact(m + h) + "\n";
    }
    if (!r.mean_coverage.empty()) {
      pairs += label + "," + FormatExact(r.mean_coverage.back()) + "," +
               FormatExact(r.mean_regret.back()) + "\n";
    }
  }
  for (const auto& s : in.evals) {
    for (std::size_t t = 0; t < s.regret.size(); ++t) {
      regret += s.agent + "," + s.env + "," + std::to_string(s.budget) + "," +
                std::to_string(t + 1) + "," + FormatExact(s.regret[t].mean) + "," +
                FormatExact(s.regret[t].low) + "," + FormatExact(s.regret[t].high) + "\n";
    }
  }
  auto bucket_row = [](std::size_t probe, const std::string& window, const BiasFractions& f) {
    return std::to_string(probe) + "," + window + "," + FormatExact(f.frequent) + "," +
           FormatExact(f.greedy) + "," + FormatExact(f.other) + "," + std::to_string(f.count) +
           "\n";
  };
  for (std::size_t i = 0; i < in.frequency.size(); ++i) {
    const auto& r = in.frequency[i];
    for (const auto& p : r.probes) {
      entropy += std::to_string(i) + "," + std::to_string(p.target) + "," +
                 std::to_string(p.base) + "," + std::to_string(p.reps) + "," +
                 FormatExact(p.entropy) + "," +
                 (p.predicted < 0 ? std::string("invalid") : std::string(CategoryName(p.category))) +
                 "\n";
    }
    buckets += bucket_row(i, "all", r.overall);
    for (std::size_t w = 0; w < r.buckets.size() && w < r.windows.size(); ++w) {
      buckets += bucket_row(i,
                            std::to_string(r.windows[w].first) + "-" +
                                std::to_string(r.windows[w].second),
                            r.buckets[w]);
    }
  }
  for (std::size_t i = 0; i < in.knowdo.size(); ++i) {
    const auto& r = in.knowdo[i];
    for (int a = 0; a < 3; ++a) {
      for (int d = 0; d < 3; ++d) {
        kd += std::to_string(i) + "," + std::string(ToString(static_cast<Knowing>(a))) + "," +
              std::string(ToString(static_cast<Doing>(d))) + "," +
              std::to_string(r.counts[a][d]) + "," +
              FormatExact(r.Cell(static_cast<Knowing>(a), static_cast<Doing>(d))) + "\n";
      }
    }
  }
  return b;
}

void WriteBundle(const std::map<std::string, std::string>& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& [name, text] : bundle) WriteText(dir / name, text);
}

FigureInputs LoadReports(const fs::path& dir) {
  FigureInputs in;
  if (!fs::exists(dir)) throw ConfigError("no such directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    if (name == "coverage_report.json") {
      in.coverage.emplace_back(fs::relative(f.parent_path(), dir).generic_string(),
                               CoverageReportFromJson(ReadText(f)));
    } else if (name == "frequency_report.json") {
      in.frequency.push_back(FrequencyReportFromJson(ReadText(f)));
    } else if (name == "knowdo_report.json") {
      in.knowdo.push_back(KnowingDoingFromJson(ReadText(f)));
    } else if (name == "summary.json") {
      in.evals.push_back(EvalSummaryFromJson(ReadText(f)));
    }
  }
  return in;
}

std::vector<std::vector<std::string>> ParseCsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      row.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace lmdecide
