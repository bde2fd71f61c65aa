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
#include <filesystem>
#include <set>

#include "lmdecide/episode.hpp"

using namespace lmdecide;

TEST_CASE("preset ids parse and reject malformed input") {
  EnvPreset p = ParseEnvPreset("mab:gauss:k10:high:numeric");
  CHECK(p.family == EnvFamily::kMab);
  CHECK(p.dist == ArmDistribution::kGaussian);
  CHECK(p.k == 10);
  CHECK(p.noise == NoiseLevel::kHigh);
  CHECK(p.scenario == Scenario::kNumeric);
  CHECK(ParseEnvPreset("cb:movielens:k10").family == EnvFamily::kContextual);
  CHECK(ParseEnvPreset("ttt:mcts-noisy").opponent == "mcts-noisy");
  CHECK_THROWS_AS(ParseEnvPreset("mab:gauss:k1:med"), ConfigError);
  CHECK_THROWS_AS(ParseEnvPreset("mab:poisson:k5:med"), ConfigError);
  CHECK_THROWS_AS(ParseEnvPreset("ttt:human"), ConfigError);
  CHECK_THROWS_AS(ParseEnvPreset("chess"), ConfigError);
}

TEST_CASE("gaussian arms have the configured moments") {
  for (auto noise : {NoiseLevel::kLow, NoiseLevel::kMedium, NoiseLevel::kHigh}) {
    double sigma = GaussianSigma(noise);
    BanditInstance inst = MakeGaussianMab(5, sigma, Scenario::kButton, 3);
    Rng rng(11);
    const int n = 40000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      double r = StepBandit(inst, 2, rng);
      sum += r;
      sq += r * r;
    }
    double mean = sum / n;
    double sd = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean - inst.arms[2].mean) < 5.0 * sigma / std::sqrt(n));
    CHECK(sd == doctest::Approx(sigma).epsilon(0.03));
    CHECK(inst.pull_counts[2] == n);
  }
}

TEST_CASE("gaussian means are uniform on the unit interval") {
  double sum = 0.0, sq = 0.0;
  int n = 0;
  for (std::uint64_t s = 0; s < 4000; ++s) {
    for (const auto& a : MakeGaussianMab(5, 1.0, Scenario::kButton, s).arms) {
      CHECK(a.mean >= 0.0);
      CHECK(a.mean < 1.0);
      sum += a.mean;
      sq += a.mean * a.mean;
      ++n;
    }
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(sq / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12.0).epsilon(0.03));
}

TEST_CASE("bernoulli instances have one better arm at the configured gap") {
  for (auto noise : {NoiseLevel::kLow, NoiseLevel::kMedium, NoiseLevel::kHigh}) {
    double gap = BernoulliGap(noise);
    BanditInstance inst = MakeBernoulliMab(5, gap, Scenario::kButton, 9);
    int better = 0;
    for (const auto& a : inst.arms) {
      if (a.mean > 0.5) {
        ++better;
        CHECK(a.mean == doctest::Approx(0.5 + gap / 2));
      } else {
        CHECK(a.mean == doctest::Approx(0.5 - gap / 2));
      }
    }
    CHECK(better == 1);
    Rng rng(5);
    int best = inst.OptimalArm();
    const int n = 20000;
    double hits = 0;
    for (int i = 0; i < n; ++i) {
      double r = StepBandit(inst, best, rng);
      CHECK((r == 0.0 || r == 1.0));
      hits += r;
    }
    CHECK(std::abs(hits / n - inst.arms[best].mean) < 0.02);
  }
  CHECK(BernoulliGap(NoiseLevel::kLow) == 0.5);
  CHECK(BernoulliGap(NoiseLevel::kMedium) == 0.2);
  CHECK(BernoulliGap(NoiseLevel::kHigh) == 0.1);
}

TEST_CASE("labels and lookups") {
  auto colors = ButtonLabels(5);
  CHECK(colors == std::vector<std::string>{"red", "green", "blue", "yellow", "orange"});
  auto twenty = ButtonLabels(20);
  CHECK(std::set<std::string>(twenty.begin(), twenty.end()).size() == 20);
  CHECK(NumericLabels(3) == std::vector<std::string>{"0", "1", "2"});
  BanditInstance inst = MakeGaussianMab(5, 1.0, Scenario::kButton, 1);
  CHECK(inst.ArmIndex("  BLUE ") == 2);
  CHECK_THROWS_AS(inst.ArmIndex("purple"), UnknownActionError);
  Rng rng(1);
  CHECK_THROWS_AS(StepBandit(inst, 7, rng), UnknownActionError);
  CHECK_THROWS_AS(MakeGaussianMab(1, 1.0, Scenario::kButton, 0), ConfigError);
  CHECK_THROWS_AS(MakeGaussianMab(3, 0.0, Scenario::kButton, 0), ConfigError);
}

TEST_CASE("regret accounting matches a direct sum") {
  BanditInstance inst = MakeGaussianMab(4, 1.0, Scenario::kNumeric, 21);
  std::vector<int> actions = {0, 1, 2, 3, 3, 1};
  auto curve = RegretCurve(inst, actions);
  double best = 0.0;
  for (const auto& a : inst.arms) best = std::max(best, a.mean);
  double total = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    total += best - inst.arms[actions[i]].mean;
    CHECK(curve[i] == doctest::Approx(total));
  }
  std::vector<std::string> labels;
  for (int a : actions) labels.push_back(inst.arms[a].label);
  CHECK(CumulativeRegret(inst, labels) == doctest::Approx(total));
}

TEST_CASE("instances and pools are reproducible and persist") {
  EnvPreset p = ParseEnvPreset("mab:bern:k5:low");
  BanditPool a = MakePool(p, 8, 42), b = MakePool(p, 8, 42);
  REQUIRE(a.size() == 8);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 5; ++j) CHECK(a.instances[i].arms[j].mean == b.instances[i].arms[j].mean);
  }
  auto path = std::filesystem::temp_directory_path() / "lmdecide_pool_test.json";
  SavePool(a, path);
  BanditPool c = LoadPool(path);
  std::filesystem::remove(path);
  REQUIRE(c.size() == 8);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 5; ++j) {
      CHECK(c.instances[i].arms[j].mean == a.instances[i].arms[j].mean);
      CHECK(c.instances[i].arms[j].label == a.instances[i].arms[j].label);
    }
  }
  Rng rng(3);
  auto subset = SamplePoolSubset(8, 5, rng);
  CHECK(std::set<int>(subset.begin(), subset.end()).size() == 5);
}

TEST_CASE("contextual rewards center on the user preference") {
  ContextualInstance inst = MakeContextual(10, 50, 0.1, 4);
  REQUIRE(inst.num_arms() == 10);
  Rng rng(8);
  const int n = 20000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += StepContextual(inst, 3, 6, rng);
  CHECK(std::abs(sum / n - inst.users[3].preferences[6]) < 0.005);
  CHECK(inst.users[3].Describe().find("This person is a ") == 0);

  ContextualEnv env(std::make_shared<ContextualInstance>(inst));
  env.Reset(rng);
  int best = 0;
  VectorXd pref = env.Context();
  pref.maxCoeff(&best);
  CHECK(env.StepRegret(best) == 0.0);
  CHECK(env.StepRegret((best + 1) % 10) > 0.0);
}

TEST_CASE("tic-tac-toe board rules") {
  Board b = Board::FromString("120120000");
  CHECK(b.to_move == Player::kAgent);
  auto [next, outcome] = ApplyMove(b, 6);
  REQUIRE(outcome);
  CHECK(outcome->result == GameResult::kWin);
  CHECK(outcome->reward == 1.0);
  CHECK(LegalActions(next).empty());
  CHECK_THROWS_AS(ApplyMove(b, 0), IllegalActionError);
  CHECK_THROWS_AS(ApplyMove(b, 9), IllegalActionError);
  CHECK_THROWS_AS(ApplyMove(next, 8), IllegalActionError);

  Board full = Board::FromString("121121212");
  CHECK(full.IsFull());
  CHECK(TerminalOutcome(full)->result == GameResult::kDraw);
  CHECK(TerminalOutcome(Board::FromString("222110100"))->reward == -1.0);
  CHECK(RenderBoard(b, true) == "120\n120\n000\nLegal actions: 2, 5, 6, 7, 8");
  CHECK_THROWS_AS(Board::FromString("12"), ConfigError);
}

TEST_CASE("tic-tac-toe env alternates moves and ends in at most five agent steps") {
  for (bool first : {true, false}) {
    TicTacToeEnv env(Opponent::kRandom, {}, first);
    for (std::uint64_t s = 0; s < 50; ++s) {
      Rng rng(s);
      env.Reset(rng);
      int steps = 0;
      while (!env.outcome()) {
        auto legal = env.Legal();
        REQUIRE(!legal.empty());
        Board before = *env.board();
        CHECK(before.to_move == Player::kAgent);
        EnvStep st = env.Step(std::stoi(legal[UniformIndex(rng, static_cast<int>(legal.size()))]), rng);
        ++steps;
        CHECK(st.done == env.outcome().has_value());
      }
      CHECK(steps <= env.horizon());
      CHECK(env.outcome()->reward == TerminalOutcome(*env.board())->reward);
    }
  }
}

TEST_CASE("environment factory covers every family") {
  CHECK(MakeEnvironment(ParseEnvPreset("mab:gauss:k5:med"), 1)->kind() == EnvKind::kBandit);
  CHECK(MakeEnvironment(ParseEnvPreset("cb:movielens:k10"), 1)->kind() == EnvKind::kContextual);
  CHECK(MakeEnvironment(ParseEnvPreset("ttt:random"), 1)->kind() == EnvKind::kTicTacToe);
}
