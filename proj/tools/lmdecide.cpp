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

// Command-line front end. Exit status: 0 ok, 1 partial or runtime failure,
// 2 configuration error.

#include <CLI11.hpp>
#include <iostream>

#include "lmdecide/harness.hpp"

namespace {

using lmdecide::ExperimentConfig;

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kConfigError = 2;

struct Overrides {
  std::string config_path;
  std::string env, agent, mechanisms, out, params, resume;
  std::vector<std::uint64_t> seeds;
  std::vector<int> budgets;
  int instances = -1;
  int updates = -1;
  double epsilon = 0.1;
  int consistency = 16;
  double bonus = 1.0;
  bool no_cot = false, summary = false, randomize = false, no_legal = false;
  bool transcripts = false;
};

void AddCommon(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config_path, "JSON experiment config");
  app->add_option("--env", o.env, "environment preset id");
  app->add_option("--agent", o.agent, "agent id");
  app->add_option("--mechanisms", o.mechanisms, "comma-separated, outermost first");
  app->add_option("--epsilon", o.epsilon, "epsilon for epsilon_greedy");
  app->add_option("--consistency", o.consistency, "samples for self_consistency");
  app->add_option("--bonus", o.bonus, "exploration bonus");
  app->add_option("--seeds", o.seeds, "seed list");
  app->add_option("--budget", o.budgets, "generation budget(s)");
  app->add_option("--instances", o.instances, "parallel instances per seed");
  app->add_option("--updates", o.updates, "total RLFT updates");
  app->add_option("-o,--out", o.out, "output directory");
  app->add_option("--params", o.params, "built-in policy parameter file");
  app->add_option("--resume", o.resume, "checkpoint to resume from");
  app->add_flag("--no-cot", o.no_cot, "ask for the action only");
  app->add_flag("--summary", o.summary, "summarize the context");
  app->add_flag("--randomize", o.randomize, "permute action labels per step");
  app->add_flag("--no-legal", o.no_legal, "omit legal actions from the prompt");
  app->add_flag("--transcripts", o.transcripts, "write transcripts.jsonl");
}

ExperimentConfig Resolve(const Overrides& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) c = lmdecide::LoadConfig(o.config_path);
  if (!o.env.empty()) c.env = o.env;
  if (!o.agent.empty()) c.agent = o.agent;
  if (!o.mechanisms.empty()) {
    c.mechanisms = lmdecide::ParseMechanisms(o.mechanisms, o.epsilon, o.consistency, o.bonus);
  }
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (!o.budgets.empty()) c.budgets = o.budgets;
  if (o.instances > 0) c.instances = o.instances;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.params.empty()) c.params_path = o.params;
  if (!o.resume.empty()) c.resume_from = o.resume;
  if (o.no_cot) c.prompt.cot = false;
  if (o.summary) c.prompt.summary = true;
  if (o.randomize) c.prompt.randomize = true;
  if (o.no_legal) c.prompt.legal_actions = false;
  if (o.transcripts) c.transcripts = true;
  if (o.updates >= 0) {
    if (!c.train) c.train = lmdecide::TrainConfig{};
    c.train->total_updates = o.updates;
  }
  c.Validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-making agents, probes and fine-tuning on bandits and tic-tac-toe"};
  app.require_subcommand(1);
  Overrides o;

  auto* eval = app.add_subcommand("eval", "evaluate an agent over seeds");
  AddCommon(eval, o);
  auto* rlft = app.add_subcommand("train-rlft", "fine-tune the built-in policy with RL");
  AddCommon(rlft, o);
  auto* sft = app.add_subcommand("train-sft", "imitate the UCB expert");
  AddCommon(sft, o);

  auto* probe = app.add_subcommand("probe", "run a failure-mode probe");
  std::string probe_kind;
  probe->add_option("kind", probe_kind, "coverage, frequency or knowdo")
      ->required()
      ->check(CLI::IsMember({"coverage", "frequency", "knowdo"}));
  AddCommon(probe, o);

  auto* gen = app.add_subcommand("gen-expert", "write a UCB expert dataset");
  lmdecide::ExpertConfig ec;
  std::string gen_out;
  bool gen_bc = false, gen_no_prompt = false;
  gen->add_option("--preset", ec.preset, "mab preset id");
  gen->add_option("--rollouts", ec.n_rollouts, "number of rollouts");
  gen->add_option("--seed", ec.seed, "master seed");
  gen->add_option("-o,--out", gen_out, "output JSONL path")->required();
  gen->add_flag("--bc", gen_bc, "actions only (no rationale)");
  gen->add_flag("--no-prompt", gen_no_prompt, "omit prompts from records");

  auto* fig = app.add_subcommand("emit-figures", "export plot-ready CSVs from run reports");
  std::string fig_in, fig_out;
  fig->add_option("--from", fig_in, "run directory")->required();
  fig->add_option("-o,--out", fig_out, "bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (eval->parsed()) {
      auto summaries = lmdecide::RunEval(Resolve(o));
      bool partial = false;
      for (const auto& s : summaries) {
        partial = partial || s.partial;
        std::cout << s.agent << " on " << s.env << " (G=" << s.budget << ")";
        if (!s.regret.empty()) {
          std::cout << ": final regret " << lmdecide::Format2(s.regret.back().mean) << " ["
                    << lmdecide::Format2(s.regret.back().low) << ", "
                    << lmdecide::Format2(s.regret.back().high) << "]";
        }
        for (const auto& [k, v] : s.game) std::cout << " " << k << "=" << lmdecide::Format2(v.mean);
        std::cout << ", invalid rate " << lmdecide::Format2(s.invalid_rate);
        if (s.partial) std::cout << ", " << s.failed_instances << " failed instances";
        std::cout << "\n";
      }
      return partial ? kPartial : kOk;
    }
    if (rlft->parsed() || sft->parsed()) {
      ExperimentConfig c = Resolve(o);
      c.train_kind = rlft->parsed() ? "rlft" : "sft";
      if (c.train_kind == "rlft" && !c.train) c.train = lmdecide::TrainConfig{};
      auto art = lmdecide::RunTraining(c);
      for (std::size_t i = 0; i < art.rlft.size(); ++i) {
        std::cout << "seed " << c.seeds[i] << ": " << art.rlft[i].updates << " updates";
        if (!art.rlft[i].log.empty() && art.rlft[i].log.back().eval_metric) {
          std::cout << ", eval " << lmdecide::FormatExact(*art.rlft[i].log.back().eval_metric);
        }
        std::cout << "\n";
      }
      for (std::size_t i = 0; i < art.sft.size(); ++i) {
        const auto& l = art.sft[i].losses;
        std::cout << "seed " << c.seeds[i] << ": final loss "
                  << (l.empty() ? std::string("n/a") : lmdecide::FormatExact(l.back())) << "\n";
      }
      return kOk;
    }
    if (probe->parsed()) {
      ExperimentConfig c = Resolve(o);
      c.probes = {probe_kind};
      c.Validate();
      auto art = lmdecide::RunProbes(c);
      for (const auto& r : art.coverage) {
        std::cout << "coverage at final step " << lmdecide::Format2(r.mean_coverage.back())
                  << "\n";
      }
      for (const auto& r : art.frequency) {
        std::cout << "frequent " << lmdecide::Format2(r.overall.frequent) << ", greedy "
                  << lmdecide::Format2(r.overall.greedy) << ", other "
                  << lmdecide::Format2(r.overall.other) << "\n";
      }
      int failed = 0;
      for (const auto& r : art.knowdo) {
        failed += r.failed_instances;
        std::cout << "correct rationales " << lmdecide::Format2(r.CorrectFraction()) << " over "
                  << r.steps << " steps\n";
      }
      return failed > 0 ? kPartial : kOk;
    }
    if (gen->parsed()) {
      ec.with_cot = !gen_bc;
      ec.include_prompt = !gen_no_prompt;
      auto m = lmdecide::GenerateExpertDataset(ec, gen_out);
      std::cout << m.records << " records, sha256 " << m.sha256 << "\n";
      return kOk;
    }
    if (fig->parsed()) {
      auto bundle = lmdecide::EmitFigureData(lmdecide::LoadReports(fig_in));
      lmdecide::WriteBundle(bundle, fig_out);
      std::cout << bundle.size() << " files written to " << fig_out << "\n";
      return kOk;
    }
  } catch (const lmdecide::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPartial;
  }
  return kOk;
}
