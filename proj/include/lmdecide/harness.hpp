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

// Experiment orchestration: configs, agent construction, seeded evaluation
// with confidence intervals, training and probe drivers, and plot-ready CSV
// export.

#ifndef LMDECIDE_HARNESS_HPP_
#define LMDECIDE_HARNESS_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lmdecide/expert_data.hpp"
#include "lmdecide/probes.hpp"
#include "lmdecide/remote.hpp"
#include "lmdecide/rlft.hpp"

namespace lmdecide {

struct ExperimentConfig {
  std::string env = "mab:gauss:k5:med:button";
  // random, ucb, ucb-unit, linucb, mcts, copycat, greedy, policy,
  // policy-zero, kd-oracle, kd-greedy, remote
  std::string agent = "ucb";
  std::vector<MechanismConfig> mechanisms;
  std::optional<TrainConfig> train;
  // "rlft" or "sft"
  std::string train_kind = "rlft";
  SftConfig sft;
  int expert_rollouts = 64;
  // Any of coverage, frequency, knowdo.
  std::vector<std::string> probes;
  FrequencyConfig frequency;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::string output_dir;
  PromptOptions prompt;
  // Generation budgets G; more than one runs a sweep.
  std::vector<int> budgets = {256};
  int instances = 64;
  int pool_size = 512;
  int window = -1;
  double temperature = 0.0;
  int mcts_simulations = 1000;
  bool agent_first = true;
  // Built-in policy parameters; empty uses the agent's default.
  std::string params_path;
  std::string resume_from;
  int eval_instances = 16;
  bool transcripts = false;

  void Validate() const;
};

std::string ConfigToJson(const ExperimentConfig& config);
// Unknown keys and malformed values throw ConfigError.
ExperimentConfig ConfigFromJson(const std::string& text);
ExperimentConfig LoadConfig(const std::filesystem::path& path);

struct AgentDeps {
  // Overrides the HTTP client of remote agents (tests use stubs).
  HttpTransport transport;
  std::shared_ptr<TranscriptStore> transcript;
};

// Agent by id, wrapped in the configured mechanisms.
AgentPtr MakeAgent(const ExperimentConfig& config, const AgentDeps& deps = {});

// Normal-approximation interval over seeds; collapses for one value.
struct Interval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};
Interval ConfidenceInterval(std::span<const double> values);

struct EvalSummary {
  std::string agent;
  std::string env;
  int budget = 256;
  int seeds = 0;
  // Per-step cumulative regret and coverage (bandits).
  std::vector<Interval> regret;
  std::vector<Interval> coverage;
  // Tic-tac-toe: return, win, draw, loss.
  std::map<std::string, Interval> game;
  double invalid_rate = 0.0;
  int failed_instances = 0;
  bool partial = false;
};

// One summary per budget. Writes config.json, metrics.csv, coverage.csv and
// summary.json under output_dir (a G<budget> subdirectory when sweeping).
std::vector<EvalSummary> RunEval(const ExperimentConfig& config, const AgentDeps& deps = {});

struct TrainingArtifacts {
  std::vector<TrainResult> rlft;  // one per seed
  std::vector<SftResult> sft;
};

// Mean final cumulative regret (bandits) or mean return (tic-tac-toe) of
// the built-in policy at temperature 0 on a fixed evaluation set.
double EvaluatePolicy(const ExperimentConfig& config, const Params& params,
                      std::uint64_t seed);

TrainingArtifacts RunTraining(const ExperimentConfig& config);

struct ProbeArtifacts {
  std::vector<CoverageReport> coverage;
  std::vector<FrequencyBiasReport> frequency;
  std::vector<KnowingDoingReport> knowdo;
};

ProbeArtifacts RunProbes(const ExperimentConfig& config, const AgentDeps& deps = {});

// ---------------------------------------------------------------------------
// Report (de)serialization and figure data.

std::string CoverageReportJson(const CoverageReport& r);
CoverageReport CoverageReportFromJson(const std::string& text);
std::string FrequencyReportJson(const FrequencyBiasReport& r);
FrequencyBiasReport FrequencyReportFromJson(const std::string& text);
std::string KnowingDoingJson(const KnowingDoingReport& r);
KnowingDoingReport KnowingDoingFromJson(const std::string& text);
std::string EvalSummaryJson(const EvalSummary& s);
EvalSummary EvalSummaryFromJson(const std::string& text);

struct FigureInputs {
  std::vector<std::pair<std::string, CoverageReport>> coverage;
  std::vector<EvalSummary> evals;
  std::vector<FrequencyBiasReport> frequency;
  std::vector<KnowingDoingReport> knowdo;
};

// file name -> CSV text. Every file is present, with a header, even when
// the inputs are empty:
//   coverage.csv        label,step,mean_coverage,ci_low,ci_high
//   coverage_regret.csv label,final_coverage,final_regret
//   regret.csv          agent,env,budget,step,mean,ci_low,ci_high
//   entropy.csv         probe,target,base,reps,entropy,category
//   bias_buckets.csv    probe,window,frequent,greedy,other,count
//   knowdo.csv          probe,knowing,doing,count,fraction
std::map<std::string, std::string> EmitFigureData(const FigureInputs& inputs);
void WriteBundle(const std::map<std::string, std::string>& bundle,
                 const std::filesystem::path& dir);
// Collects every *_report.json / summary.json below `dir`.
FigureInputs LoadReports(const std::filesystem::path& dir);

// Minimal CSV reader for the files above (no quoting is ever needed).
std::vector<std::vector<std::string>> ParseCsv(const std::string& text);

}  // namespace lmdecide

#endif  // LMDECIDE_HARNESS_HPP_
