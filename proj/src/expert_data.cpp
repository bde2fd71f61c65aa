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

#include "lmdecide/expert_data.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "lmdecide/agents.hpp"
#include "lmdecide/textio.hpp"

namespace lmdecide {

using nlohmann::json;

std::string RenderRationaleLine(const UcbState& state, int arm) {
  const std::string& label = state.labels[arm];
  const int n = state.counts[arm];
  std::string head = "Count for action " + label + " = " + std::to_string(n);
  if (n == 0) return head + ", Mean = NaN, UCB = NaN";
  std::vector<std::string> terms;
  for (double r : state.rewards[arm]) terms.push_back(Format2(r));
  double sum = 0.0;
  for (double r : state.rewards[arm]) sum += Round2(r);
  double mean = Round2(sum / n);
  double value = Round2(mean + std::sqrt(1.0 / n));
  std::string ns = std::to_string(n);
  return head + ", Mean = (" + Join(terms, " + ") + ") / " + ns + " = " + Format2(mean) +
         ", UCB = " + Format2(mean) + " + sqrt(1 / " + ns + ")) = " + Format2(value);
}

std::string RenderUcbRationale(const UcbState& state, const std::string& selected,
                               RationalePhase phase) {
  std::string out =
      "Let's think step-by-step. We calculate the counts and means for every action.\n\n";
  for (int a = 0; a < state.num_arms(); ++a) out += RenderRationaleLine(state, a) + "\n";
  out += "\n";
  if (phase == RationalePhase::kTryAll) {
    out += "We have not yet selected all actions. Therefore, we select the next one.";
  } else {
    out += "We select actions according to the highest UCB value. Therefore, action " +
           selected + " is selected.";
  }
  return out + "\n\nACTION=" + selected;
}

std::vector<ExpertRecord> ExpertRollout(const BanditInstance& instance, int episode,
                                        const ExpertConfig& config, Rng& rng) {
  BanditInstance inst = instance;
  auto labels = inst.Labels();
  UcbState state = MakeUcbState(labels, UcbVariant::kUnitBonus);
  std::vector<Transition> history;
  std::vector<ExpertRecord> out;
  PromptOptions popt;
  popt.cot = config.with_cot;
  std::string instructions;
  if (config.include_prompt) instructions = BanditInstructions(inst.scenario, labels, inst.horizon);

  for (int step = 0; step < inst.horizon; ++step) {
    ExpertRecord rec;
    rec.step = step;
    rec.episode = episode;
    if (config.include_prompt) {
      PromptParts parts;
      parts.kind = EnvKind::kBandit;
      parts.input_instructions = instructions;
      parts.history = history;
      rec.prompt = BuildPrompt(parts, popt, labels);
    }
    int arm = UcbSelectIndex(state);
    bool untried = false;
    for (int n : state.counts) untried = untried || n == 0;
    rec.action = labels[arm];
    if (config.with_cot) {
      rec.rationale = RenderUcbRationale(
          state, rec.action, untried ? RationalePhase::kTryAll : RationalePhase::kUcb);
    }
    rec.reward = Round2(StepBandit(inst, arm, rng));
    UcbUpdateInPlace(state, arm, rec.reward);
    Transition t;
    t.step = step;
    t.action = rec.action;
    t.reward = rec.reward;
    history.push_back(std::move(t));
    out.push_back(std::move(rec));
  }
  return out;
}

std::string RecordToJson(const ExpertRecord& r) {
  json j;
  j["episode"] = r.episode;
  j["step"] = r.step;
  if (!r.prompt.empty()) j["prompt"] = r.prompt;
  if (r.rationale) j["rationale"] = *r.rationale;
  j["action"] = r.action;
  j["reward"] = r.reward;
  return j.dump();
}

ExpertRecord RecordFromJson(const std::string& line) {
  json j = json::parse(line);
  ExpertRecord r;
  r.episode = j.at("episode").get<int>();
  r.step = j.at("step").get<int>();
  if (j.contains("prompt")) r.prompt = j["prompt"].get<std::string>();
  if (j.contains("rationale")) r.rationale = j["rationale"].get<std::string>();
  r.action = j.at("action").get<std::string>();
  r.reward = j.at("reward").get<double>();
  return r;
}

namespace {

void ValidateExpert(const ExpertConfig& config) {
  if (config.n_rollouts < 1) throw ConfigError("n_rollouts must be at least 1");
  if (ParseEnvPreset(config.preset).family != EnvFamily::kMab) {
    throw ConfigError("expert data needs a mab preset");
  }
}

template <typename Fn>
void ForEachRollout(const ExpertConfig& config, Fn&& fn) {
  EnvPreset preset = ParseEnvPreset(config.preset);
  for (int e = 0; e < config.n_rollouts; ++e) {
    std::string id = std::to_string(e);
    BanditInstance inst = MakeMab(preset, SubSeed(config.seed, "expert/instance/" + id));
    Rng rng = SubStream(config.seed, "expert/env/" + id);
    fn(inst, ExpertRollout(inst, e, config, rng));
  }
}

}  // namespace

DatasetManifest WriteExpertDataset(const ExpertConfig& config, std::ostream& out) {
  ValidateExpert(config);
  DatasetManifest m;
  m.preset = config.preset;
  m.seed = config.seed;
  m.n_rollouts = config.n_rollouts;
  m.with_cot = config.with_cot;
  Sha256 digest;
  ForEachRollout(config, [&](const BanditInstance&, const std::vector<ExpertRecord>& recs) {
    for (const auto& r : recs) {
      std::string line = RecordToJson(r) + "\n";
      digest.Update(line);
      out << line;
      ++m.records;
    }
  });
  if (!out) throw std::runtime_error("failed writing expert dataset");
  m.sha256 = digest.HexDigest();
  return m;
}

std::string ManifestToJson(const DatasetManifest& m) {
  json j;
  j["preset"] = m.preset;
  j["seed"] = m.seed;
  j["n_rollouts"] = m.n_rollouts;
  j["records"] = m.records;
  j["with_cot"] = m.with_cot;
  j["sha256"] = m.sha256;
  return j.dump(2);
}

DatasetManifest GenerateExpertDataset(const ExpertConfig& config,
                                      const std::filesystem::path& path) {
  ValidateExpert(config);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  DatasetManifest m = WriteExpertDataset(config, out);
  out.close();
  if (!out) throw std::runtime_error("failed closing " + path.string());
  std::ofstream side(path.string() + ".manifest.json", std::ios::binary);
  side << ManifestToJson(m) << "\n";
  if (!side) throw std::runtime_error("failed writing manifest for " + path.string());
  return m;
}

std::vector<ExpertRecord> ReadExpertDataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<ExpertRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(RecordFromJson(line));
  }
  return out;
}

std::vector<SftExample> ExpertSftExamples(const ExpertConfig& config) {
  ValidateExpert(config);
  ExpertConfig c = config;
  c.include_prompt = false;
  c.with_cot = false;
  std::vector<SftExample> out;
  ForEachRollout(c, [&](const BanditInstance& inst, const std::vector<ExpertRecord>& recs) {
    auto labels = inst.Labels();
    std::vector<Transition> history;
    for (const auto& r : recs) {
      SftExample ex;
      ex.phi = BanditArmFeatures(history, labels);
      ex.action = inst.ArmIndex(r.action);
      out.push_back(std::move(ex));
      Transition t;
      t.step = r.step;
      t.action = r.action;
      t.reward = r.reward;
      history.push_back(std::move(t));
    }
  });
  return out;
}

}  // namespace lmdecide
