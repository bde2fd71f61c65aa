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

#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "lmdecide/probes.hpp"

using namespace lmdecide;

namespace {

std::vector<Transition> Pulls(const std::vector<std::pair<std::string, double>>& pulls) {
  std::vector<Transition> h;
  for (const auto& [a, r] : pulls) {
    Transition t;
    t.step = static_cast<int>(h.size());
    t.action = a;
    t.reward = r;
    h.push_back(t);
  }
  return h;
}

// Standard UCB values recomputed from scratch; +inf for untried arms.
std::vector<double> OracleUcb(const std::vector<Transition>& h,
                              const std::vector<std::string>& labels) {
  std::vector<double> sum(labels.size(), 0.0), n(labels.size(), 0.0);
  for (const auto& t : h) {
    for (std::size_t a = 0; a < labels.size(); ++a) {
      if (labels[a] == t.action) {
        sum[a] += t.reward;
        n[a] += 1.0;
      }
    }
  }
  std::vector<double> v(labels.size());
  for (std::size_t a = 0; a < labels.size(); ++a) {
    v[a] = n[a] == 0.0 ? std::numeric_limits<double>::infinity()
                       : sum[a] / n[a] + std::sqrt(2.0 * std::log(double(h.size())) / n[a]);
  }
  return v;
}

std::set<std::size_t> ArgmaxSet(const std::vector<double>& v, const std::vector<bool>& listed,
                                double tol) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (listed[i]) m = std::max(m, v[i]);
  }
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (listed[i] && (v[i] == m || std::abs(v[i] - m) <= tol)) out.insert(i);
  }
  return out;
}

class Flaky final : public Agent {
 public:
  std::string Name() const override { return "flaky"; }
  AgentReply Act(const StepContext& ctx, Rng&) override {
    if (ctx.step == 3) throw TransportError("down");
    return MakeReply("ACTION=" + ctx.labels[0], ctx.ActionSet());
  }
};

}  // namespace

TEST_CASE("coverage curves") {
  std::vector<int> a = {0, 0, 2, 1, 2};
  auto c = CoverageCurve(a, 4);
  CHECK(c == std::vector<double>{0.25, 0.25, 0.5, 0.75, 0.75});

  BanditPool pool = MakePool(ParseEnvPreset("mab:gauss:k5:med"), 6, 3);
  RunOptions opt;
  opt.render_prompts = false;
  auto ucb = MakeUcbAgent();
  auto rep = ProbeCoverage(*ucb, pool.instances, opt, 1);
  REQUIRE(rep.mean_coverage.size() == 50);
  CHECK(rep.mean_coverage[3] == doctest::Approx(0.8));
  CHECK(rep.mean_coverage[4] == 1.0);
  CHECK(rep.coverage_se[4] == 0.0);
  long long total = 0;
  for (auto h : rep.histogram) total += h;
  CHECK(total == 6 * 50);
  CHECK(rep.mean_regret.back() > 0.0);
}

TEST_CASE("repetition prefixes") {
  auto base = Pulls({{"a", 0.1}, {"b", 0.7}});
  auto h = BuildRepetitionPrefix(base, "b", 3, 0.4);
  REQUIRE(h.size() == 5);
  CHECK(h[4].step == 4);
  CHECK(h[4].action == "b");
  CHECK(h[4].reward == 0.4);
  CHECK_THROWS_AS(BuildRepetitionPrefix(base, "a", 1, 0.0), ConfigError);
  CHECK(ClassifyAction(2, 2, 2) == BiasCategory::kGreedy);
  CHECK(ClassifyAction(1, 1, 2) == BiasCategory::kFrequent);
  CHECK(ClassifyAction(0, 1, 2) == BiasCategory::kOther);
}

TEST_CASE("frequency probe: a uniform agent lands in other about 80% of the time") {
  auto random = MakeRandomAgent();
  FrequencyConfig cfg;
  cfg.seed = 4;
  FrequencyBiasReport rep = ProbeFrequencyBias(*random, cfg);
  CHECK(rep.probes.size() == 5 * 5 * 101);
  CHECK(rep.invalid == 0);
  CHECK(std::abs(rep.overall.other - 0.8) <= 0.03);
  CHECK(std::abs(rep.overall.frequent - 0.1) <= 0.03);
  for (const auto& p : rep.probes) {
    CHECK(p.frequent != p.greedy);
    CHECK(p.entropy == doctest::Approx(std::log(10.0)));
  }
  REQUIRE(rep.buckets.size() == 3);
  CHECK(rep.buckets[0].count == 5 * 5 * 11);
}

TEST_CASE("frequency probe: a copycat always follows the frequent action") {
  auto copycat = MakeScriptedAgent(ScriptedKind::kCopycat);
  FrequencyConfig cfg;
  cfg.targets = 2;
  cfg.bases = 2;
  cfg.max_reps = 20;
  FrequencyBiasReport rep = ProbeFrequencyBias(*copycat, cfg);
  CHECK(rep.overall.frequent == 1.0);
  for (const auto& p : rep.probes) CHECK(p.entropy == 0.0);
  cfg.max_base = 1;
  CHECK_THROWS_AS(ProbeFrequencyBias(*copycat, cfg), ConfigError);
}

TEST_CASE("UCB block parsing") {
  std::vector<std::string> labels = {"blue", "green", "red"};
  auto p = ParseUcbBlock(
      "<ucb_values>blue=9</ucb_values> later: <UCB_VALUES>\nBlue: 1.5\ngreen = inf, "
      "red=nan purple=3\n</UCB_values>",
      labels);
  REQUIRE(p);
  CHECK(p->size() == 2);
  CHECK(p->at("blue") == 1.5);
  CHECK(std::isinf(p->at("green")));
  CHECK_FALSE(ParseUcbBlock("<ucb_values>blue=1", labels));
  CHECK_FALSE(ParseUcbBlock("blue=1", labels));
  CHECK_FALSE(ParseUcbBlock("<ucb_values>purple=1</ucb_values>", labels));
  CHECK(ParseUcbBlock("<ucb_values>red=+2.5;blue=\xe2\x88\x9e</ucb_values>", labels)->at("red") == 2.5);

  UcbState s = UcbStateFromHistory(Pulls({{"blue", 1.0}, {"green", 0.5}}), labels);
  auto back = ParseUcbBlock(RenderUcbBlock(s), labels);
  REQUIRE(back);
  for (int a = 0; a < 3; ++a) CHECK(back->at(labels[a]) == s.Value(a));
}

TEST_CASE("knowing scores agree with an independent argmax oracle") {
  std::vector<std::string> labels = ButtonLabels(5);
  Rng rng(2024);
  std::normal_distribution<double> n01;
  int correct = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    int len = UniformIndex(rng, 12);
    std::vector<Transition> h;
    for (int s = 0; s < len; ++s) {
      Transition t;
      t.step = s;
      t.action = labels[UniformIndex(rng, 5)];
      t.reward = n01(rng);
      h.push_back(t);
    }
    auto truth = OracleUcb(h, labels);
    std::vector<double> claimed(5);
    std::vector<bool> listed(5, false);
    std::string block = "Reasoning...\n<ucb_values>\n";
    int mode = trial % 3;
    for (int a = 0; a < 5; ++a) {
      if (mode != 0 && Uniform01(rng) < 0.3) continue;
      listed[a] = true;
      claimed[a] = mode == 0 ? truth[a]
                   : mode == 1 ? truth[a] + 0.05 * n01(rng)
                               : 3.0 * n01(rng);
      std::string label = Uniform01(rng) < 0.5 ? labels[a] : ToLower(labels[a]);
      std::string sep = Uniform01(rng) < 0.5 ? " = " : ": ";
      block += label + sep + (std::isinf(claimed[a]) ? "inf" : FormatExact(claimed[a])) + "\n";
    }
    block += "</ucb_values>\nACTION=" + labels[0];
    bool any = std::count(listed.begin(), listed.end(), true) > 0;
    KnowingScore k = ScoreKnowing(block, h, labels);
    if (!any) {
      CHECK(k.knowing == Knowing::kUnparsed);
      continue;
    }
    auto pa = ArgmaxSet(claimed, listed, 0.0);
    auto ta = ArgmaxSet(truth, listed, 1e-12);
    bool intersect = false;
    for (auto i : pa) intersect = intersect || ta.count(i) > 0;
    CHECK(k.knowing == (intersect ? Knowing::kCorrect : Knowing::kIncorrect));
    CHECK(k.tie == (pa.size() > 1 || ta.size() > 1));
    correct += k.knowing == Knowing::kCorrect;
  }
  CHECK(correct > 300);
  CHECK(correct < 1000);
  CHECK(ScoreKnowing("no block at all", {}, labels).knowing == Knowing::kUnparsed);
}

TEST_CASE("doing scores") {
  std::vector<std::string> labels = {"a", "b", "c"};
  auto h = Pulls({{"a", 1.0}, {"b", 0.0}});
  // c is untried, so it alone has the maximal (infinite) value.
  CHECK(ScoreDoing("c", h, labels) == Doing::kOptimal);
  CHECK(ScoreDoing("a", h, labels) == Doing::kGreedy);
  CHECK(ScoreDoing("b", h, labels) == Doing::kOther);
  auto all = Pulls({{"a", 1.0}, {"b", 0.0}, {"c", 0.5}});
  CHECK(ScoreDoing("a", all, labels) == Doing::kOptimal);
  CHECK(ScoreDoing("c", all, labels) == Doing::kOther);
}

TEST_CASE("knowing-doing probe on scripted transcripts") {
  BanditPool pool = MakePool(ParseEnvPreset("mab:gauss:k5:med"), 4, 8);
  auto oracle = MakeUcbTranscriptAgent(false);
  auto rep = ProbeKnowingDoing(*oracle, pool.instances, 256, 1);
  CHECK(rep.steps == 4 * 50);
  CHECK(rep.invalid == 0);
  CHECK(rep.CorrectFraction() == 1.0);
  CHECK(rep.Cell(Knowing::kCorrect, Doing::kOptimal) == 1.0);

  auto greedy = MakeUcbTranscriptAgent(true);
  auto g = ProbeKnowingDoing(*greedy, pool.instances, 256, 1);
  CHECK(g.CorrectFraction() == 1.0);
  CHECK(g.Cell(Knowing::kCorrect, Doing::kGreedy) > 0.5);
  CHECK(g.MergedCell(false, Doing::kGreedy) == 0.0);

  Flaky flaky;
  auto f = ProbeKnowingDoing(flaky, pool.instances, 256, 1);
  CHECK(f.failed_instances == 4);
  CHECK(f.steps == 0);
}
