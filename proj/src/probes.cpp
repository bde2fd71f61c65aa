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

#include "lmdecide/probes.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <regex>

namespace lmdecide {

namespace {

void MeanAndSe(const std::vector<std::vector<double>>& rows, std::size_t width,
               std::vector<double>& mean, std::vector<double>& se) {
  mean.assign(width, 0.0);
  se.assign(width, 0.0);
  const double n = static_cast<double>(rows.size());
  if (rows.empty()) return;
  for (const auto& r : rows) {
    for (std::size_t t = 0; t < width; ++t) mean[t] += r[t];
  }
  for (auto& m : mean) m /= n;
  if (rows.size() < 2) return;
  for (const auto& r : rows) {
    for (std::size_t t = 0; t < width; ++t) se[t] += (r[t] - mean[t]) * (r[t] - mean[t]);
  }
  for (auto& s : se) s = std::sqrt(s / (n - 1.0) / n);
}

// Pads a per-step curve to `width` by repeating its last value.
std::vector<double> Pad(std::vector<double> v, std::size_t width) {
  double last = v.empty() ? 0.0 : v.back();
  v.resize(width, last);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Coverage.

std::vector<double> CoverageCurve(std::span<const int> actions, int num_arms) {
  std::vector<bool> seen(num_arms, false);
  std::vector<double> out;
  int tried = 0;
  for (int a : actions) {
    if (!seen[a]) {
      seen[a] = true;
      ++tried;
    }
    out.push_back(static_cast<double>(tried) / num_arms);
  }
  return out;
}

CoverageReport ProbeCoverage(Agent& agent, std::span<const BanditInstance> instances,
                             const RunOptions& options, std::uint64_t seed) {
  CoverageReport rep;
  if (instances.empty()) return rep;
  rep.num_arms = instances[0].num_arms();
  rep.instances = static_cast<int>(instances.size());
  rep.histogram.assign(rep.num_arms, 0);
  std::size_t width = 0;
  std::vector<std::vector<double>> coverage, regret;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    BanditEnv env(instances[i]);
    Rng env_rng = SubStream(seed, "coverage/env/" + std::to_string(i));
    Rng agent_rng = SubStream(seed, "coverage/agent/" + std::to_string(i));
    EpisodeResult ep = RunEpisode(env, agent, options, env_rng, agent_rng);
    std::vector<int> actions;
    for (const auto& s : ep.steps) {
      actions.push_back(s.executed);
      ++rep.histogram[s.executed];
    }
    coverage.push_back(CoverageCurve(actions, rep.num_arms));
    regret.push_back(ep.cumulative_regret);
    width = std::max(width, actions.size());
  }
  for (auto& c : coverage) c = Pad(std::move(c), width);
  for (auto& r : regret) r = Pad(std::move(r), width);
  MeanAndSe(coverage, width, rep.mean_coverage, rep.coverage_se);
  MeanAndSe(regret, width, rep.mean_regret, rep.regret_se);
  return rep;
}

// ---------------------------------------------------------------------------
// Frequency bias.

std::vector<Transition> BuildRepetitionPrefix(std::span<const Transition> base,
                                              const std::string& target_action, int reps,
                                              double fixed_reward) {
  if (!base.empty() && base.back().action != target_action) {
    throw ConfigError("the repeated action must be the last action of the base history");
  }
  std::vector<Transition> out(base.begin(), base.end());
  int step = base.empty() ? 0 : base.back().step + 1;
  for (int r = 0; r < reps; ++r) {
    Transition t;
    t.step = step++;
    t.action = target_action;
    t.reward = fixed_reward;
    out.push_back(std::move(t));
  }
  return out;
}

BiasCategory ClassifyAction(int action, int frequent, int greedy) {
  if (action == greedy) return BiasCategory::kGreedy;
  if (action == frequent) return BiasCategory::kFrequent;
  return BiasCategory::kOther;
}

BiasFractions Fractions(std::span<const FrequencyProbe> probes) {
  BiasFractions f;
  for (const auto& p : probes) {
    if (p.predicted < 0) continue;
    ++f.count;
    switch (p.category) {
      case BiasCategory::kFrequent: f.frequent += 1.0; break;
      case BiasCategory::kGreedy: f.greedy += 1.0; break;
      case BiasCategory::kOther: f.other += 1.0; break;
    }
  }
  if (f.count > 0) {
    f.frequent /= f.count;
    f.greedy /= f.count;
    f.other /= f.count;
  }
  return f;
}

namespace {

struct BaseProbe {
  std::vector<Transition> base;
  double fixed_reward = 0.0;
};

// True when the most frequent and the greedy action differ at every
// repetition count.
bool SeparatesAtAllReps(const std::vector<Transition>& base, int target, double fixed,
                        std::span<const std::string> labels, int max_reps) {
  const int k = static_cast<int>(labels.size());
  std::vector<int> counts(k, 0);
  std::vector<double> sums(k, 0.0);
  for (const auto& t : base) {
    int a = static_cast<int>(std::find(labels.begin(), labels.end(), t.action) - labels.begin());
    ++counts[a];
    sums[a] += t.reward;
  }
  for (int r = 0; r <= max_reps; ++r) {
    if (r > 0) {
      ++counts[target];
      sums[target] += fixed;
    }
    int freq = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    int greedy = -1;
    for (int a = 0; a < k; ++a) {
      if (counts[a] == 0) continue;
      if (greedy < 0 || sums[a] / counts[a] > sums[greedy] / counts[greedy]) greedy = a;
    }
    if (freq == greedy) return false;
  }
  return true;
}

BaseProbe DrawBase(const BanditInstance& inst, int target, const FrequencyConfig& cfg,
                   std::span<const std::string> labels, Rng& rng) {
  const int k = inst.num_arms();
  for (int attempt = 0; attempt < 100000; ++attempt) {
    int len = cfg.min_base + UniformIndex(rng, cfg.max_base - cfg.min_base + 1);
    BaseProbe p;
    for (int s = 0; s < len; ++s) {
      int a = s + 1 == len ? target : UniformIndex(rng, k);
      Transition t;
      t.step = s;
      t.action = labels[a];
      t.reward = Round2(inst.arms[a].Sample(rng));
      p.base.push_back(std::move(t));
    }
    p.fixed_reward = Round2(inst.arms[target].Sample(rng));
    if (SeparatesAtAllReps(p.base, target, p.fixed_reward, labels, cfg.max_reps)) return p;
  }
  throw EstimationError("could not draw a base history separating frequent and greedy");
}

}  // namespace

FrequencyBiasReport ProbeFrequencyBias(Agent& agent, const FrequencyConfig& cfg) {
  if (cfg.targets < 1 || cfg.bases < 1 || cfg.max_reps < 0 || cfg.min_base < 2 ||
      cfg.max_base < cfg.min_base) {
    throw ConfigError("invalid frequency-probe configuration");
  }
  EnvPreset preset = ParseEnvPreset(cfg.preset);
  if (preset.family != EnvFamily::kMab) throw ConfigError("frequency probe needs a mab preset");
  BanditInstance inst = MakeMab(preset, SubSeed(cfg.seed, "freq/instance"));
  auto labels = inst.Labels();
  const int k = inst.num_arms();
  if (cfg.targets > k) throw ConfigError("more targets than arms");

  FrequencyBiasReport rep;
  rep.num_arms = k;
  rep.windows = {{0, 10}, {45, 55}, {90, 100}};
  Rng rng = SubStream(cfg.seed, "freq/bases");
  auto targets = SamplePoolSubset(k, cfg.targets, rng);
  PromptOptions popt;
  popt.cot = cfg.cot;

  for (int ti = 0; ti < cfg.targets; ++ti) {
    int target = targets[ti];
    for (int bi = 0; bi < cfg.bases; ++bi) {
      BaseProbe bp = DrawBase(inst, target, cfg, labels, rng);
      for (int reps = 0; reps <= cfg.max_reps; ++reps) {
        FrequencyProbe probe;
        probe.target = target;
        probe.base = bi;
        probe.reps = reps;
        auto history = BuildRepetitionPrefix(bp.base, labels[target], reps, bp.fixed_reward);
        probe.frequent = ModalAction(history, labels);
        probe.greedy = GreedyMeanAction(history, labels);

        PromptParts parts;
        parts.kind = EnvKind::kBandit;
        parts.input_instructions = BanditInstructions(inst.scenario, labels, inst.horizon);
        parts.history = history;
        StepContext ctx;
        ctx.kind = EnvKind::kBandit;
        ctx.labels = labels;
        ctx.legal = labels;
        ctx.history = history;
        ctx.step = static_cast<int>(history.size());
        ctx.horizon = std::max(inst.horizon, ctx.step + 1);
        ctx.budget = cfg.budget;
        ctx.temperature = cfg.temperature;
        ctx.prompt = BuildPrompt(parts, popt, labels);

        Rng prng = SubStream(cfg.seed, "freq/probe/" + std::to_string(ti) + "/" +
                                           std::to_string(bi) + "/" + std::to_string(reps));
        VectorXd dist;
        auto exact = cfg.mode == DistributionMode::kExact ? agent.ExactDistribution(ctx)
                                                          : std::nullopt;
        if (exact) {
          dist = *exact;
        } else {
          dist = ActionDistribution(agent, ctx, DistributionMode::kSampled, cfg.samples, prng);
        }
        probe.entropy = Entropy(dist);
        AgentReply reply = agent.Act(ctx, prng);
        if (reply.valid && reply.extracted_action) {
          probe.predicted = ctx.LabelIndex(*reply.extracted_action);
          probe.category = ClassifyAction(probe.predicted, probe.frequent, probe.greedy);
        } else {
          ++rep.invalid;
        }
        rep.probes.push_back(probe);
      }
    }
  }
  rep.overall = Fractions(rep.probes);
  for (const auto& [lo, hi] : rep.windows) {
    std::vector<FrequencyProbe> in;
    for (const auto& p : rep.probes) {
      if (p.reps >= lo && p.reps <= hi) in.push_back(p);
    }
    rep.buckets.push_back(Fractions(in));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Knowing-doing.

std::string_view ToString(Knowing k) {
  switch (k) {
    case Knowing::kCorrect: return "correct";
    case Knowing::kIncorrect: return "incorrect";
    case Knowing::kUnparsed: return "unparsed";
  }
  return "?";
}

std::string_view ToString(Doing d) {
  switch (d) {
    case Doing::kOptimal: return "optimal";
    case Doing::kGreedy: return "greedy";
    case Doing::kOther: return "other";
  }
  return "?";
}

namespace {

std::optional<double> ParseValue(std::string v) {
  v = ToLower(Trim(v));
  if (v == "inf" || v == "+inf" || v == "infinity" || v == "\xe2\x88\x9e") {
    return std::numeric_limits<double>::infinity();
  }
  if (!v.empty() && v[0] == '+') v.erase(0, 1);
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr == v.data()) return std::nullopt;
  if (std::isnan(x)) return std::nullopt;
  return x;
}

}  // namespace

std::optional<std::map<std::string, double>> ParseUcbBlock(
    std::string_view text, std::span<const std::string> labels) {
  static constexpr std::string_view kOpen = "<ucb_values>";
  static constexpr std::string_view kClose = "</ucb_values>";
  std::string lower = ToLower(text);
  auto open = lower.rfind(kOpen);
  if (open == std::string::npos) return std::nullopt;
  auto close = lower.find(kClose, open);
  if (close == std::string::npos) return std::nullopt;
  std::string body(text.substr(open + kOpen.size(), close - open - kOpen.size()));

  static const std::regex kPair(R"(([^\s=:,;]+)\s*[=:]\s*([^\s,;]+))");
  std::map<std::string, double> out;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), kPair);
       it != std::sregex_iterator(); ++it) {
    std::string label = ToLower(Trim((*it)[1].str()));
    for (const auto& l : labels) {
      if (ToLower(l) != label) continue;
      if (auto v = ParseValue((*it)[2].str())) out[l] = *v;
    }
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::string RenderUcbBlock(const UcbState& state) {
  std::string out = "<ucb_values>";
  for (int a = 0; a < state.num_arms(); ++a) {
    double v = state.Value(a);
    out += "\n" + state.labels[a] + "=" + (std::isinf(v) ? std::string("inf") : FormatExact(v));
  }
  return out + "\n</ucb_values>";
}

KnowingScore ScoreKnowing(std::string_view transcript, std::span<const Transition> history,
                          std::span<const std::string> labels) {
  KnowingScore score;
  auto parsed = ParseUcbBlock(transcript, labels);
  if (!parsed) return score;
  score.parsed = *parsed;
  UcbState truth = UcbStateFromHistory(history, labels, UcbVariant::kStandard, std::sqrt(2.0));
  double parsed_max = -std::numeric_limits<double>::infinity();
  double true_max = -std::numeric_limits<double>::infinity();
  for (const auto& [label, v] : *parsed) {
    parsed_max = std::max(parsed_max, v);
    true_max = std::max(true_max, truth.Value(truth.Index(label)));
  }
  int parsed_n = 0, true_n = 0;
  bool hit = false;
  for (const auto& [label, v] : *parsed) {
    bool p = v == parsed_max;
    bool t = truth.Value(truth.Index(label)) == true_max;
    parsed_n += p;
    true_n += t;
    hit = hit || (p && t);
  }
  score.tie = parsed_n > 1 || true_n > 1;
  score.knowing = hit ? Knowing::kCorrect : Knowing::kIncorrect;
  return score;
}

Doing ScoreDoing(const std::string& chosen, std::span<const Transition> history,
                 std::span<const std::string> labels) {
  UcbState s = UcbStateFromHistory(history, labels, UcbVariant::kStandard, std::sqrt(2.0));
  int c = s.Index(chosen);
  double best = -std::numeric_limits<double>::infinity();
  double best_tried = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < s.num_arms(); ++a) {
    best = std::max(best, s.Value(a));
    if (s.counts[a] > 0) best_tried = std::max(best_tried, s.Value(a));
  }
  double v = s.Value(c);
  if (v == best) return Doing::kOptimal;
  if (s.counts[c] > 0 && v == best_tried) return Doing::kGreedy;
  return Doing::kOther;
}

double KnowingDoingReport::CorrectFraction() const {
  if (steps == 0) return 0.0;
  long long c = counts[0][0] + counts[0][1] + counts[0][2];
  return static_cast<double>(c) / static_cast<double>(steps);
}

double KnowingDoingReport::Cell(Knowing k, Doing d) const {
  if (steps == 0) return 0.0;
  return static_cast<double>(counts[static_cast<int>(k)][static_cast<int>(d)]) /
         static_cast<double>(steps);
}

double KnowingDoingReport::MergedCell(bool correct, Doing d) const {
  if (correct) return Cell(Knowing::kCorrect, d);
  return Cell(Knowing::kIncorrect, d) + Cell(Knowing::kUnparsed, d);
}

namespace {

class UcbTranscriptAgent final : public Agent {
 public:
  explicit UcbTranscriptAgent(bool greedy) : greedy_(greedy) {}

  std::string Name() const override { return greedy_ ? "kd-greedy" : "kd-oracle"; }

  AgentReply Act(const StepContext& ctx, Rng&) override {
    UcbState s = UcbStateFromHistory(ctx.history, ctx.labels, UcbVariant::kStandard,
                                     std::sqrt(2.0));
    int pick = UcbSelectIndex(s);
    if (greedy_) {
      int best = -1;
      for (int a = 0; a < s.num_arms(); ++a) {
        if (s.counts[a] == 0) continue;
        if (best < 0 || s.Value(a) > s.Value(best)) best = a;
      }
      if (best >= 0) pick = best;
    }
    std::string text = "The UCB values for every arm given the history:\n" +
                       RenderUcbBlock(s) + "\nACTION=" + ctx.labels[pick];
    return MakeReply(std::move(text), ctx.ActionSet());
  }

 private:
  bool greedy_;
};

}  // namespace

AgentPtr MakeUcbTranscriptAgent(bool act_greedily) {
  return std::make_shared<UcbTranscriptAgent>(act_greedily);
}

KnowingDoingReport ProbeKnowingDoing(Agent& agent, std::span<const BanditInstance> instances,
                                     int budget, std::uint64_t seed) {
  KnowingDoingReport rep;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    BanditEnv env(instances[i]);
    auto labels = env.labels();
    RunOptions opt;
    opt.budget = budget;
    opt.prompt.context_budget = std::max(opt.prompt.context_budget, budget);
    opt.input_instructions = env.InputInstructions(true) + "\n\n" + UcbAgentInstructions();
    KnowingDoingReport local;
    auto observer = [&](const StepRecord& rec) {
      if (!rec.valid || rec.generated < 0) {
        ++local.invalid;
        return;
      }
      KnowingScore k = ScoreKnowing(rec.reply.raw_text, rec.shown_history, labels);
      Doing d = ScoreDoing(labels[rec.generated], rec.shown_history, labels);
      ++local.counts[static_cast<int>(k.knowing)][static_cast<int>(d)];
      ++local.steps;
      local.ties += k.tie;
    };
    Rng env_rng = SubStream(seed, "knowdo/env/" + std::to_string(i));
    Rng agent_rng = SubStream(seed, "knowdo/agent/" + std::to_string(i));
    try {
      RunEpisode(env, agent, opt, env_rng, agent_rng, observer);
    } catch (const TransportError&) {
      ++rep.failed_instances;
      continue;
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) rep.counts[a][b] += local.counts[a][b];
    }
    rep.steps += local.steps;
    rep.invalid += local.invalid;
    rep.ties += local.ties;
  }
  return rep;
}

}  // namespace lmdecide
