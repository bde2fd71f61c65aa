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

#include "lmdecide/baselines.hpp"
#include "lmdecide/episode.hpp"

using namespace lmdecide;

namespace {

std::vector<Transition> History(const std::vector<std::pair<std::string, double>>& pulls) {
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

StepContext BanditContext(const std::vector<std::string>& labels, std::vector<Transition> h) {
  StepContext ctx;
  ctx.labels = labels;
  ctx.history = std::move(h);
  ctx.step = static_cast<int>(ctx.history.size());
  return ctx;
}

}  // namespace

TEST_CASE("UCB values follow both bonus variants") {
  std::vector<std::string> labels = {"a", "b", "c"};
  auto h = History({{"a", 1.0}, {"b", 0.0}, {"a", 0.5}, {"b", 0.2}});
  UcbState s = UcbStateFromHistory(h, labels);
  CHECK(s.t == 4);
  CHECK(s.Mean(0) == doctest::Approx(0.75));
  CHECK(std::isnan(s.Mean(2)));
  CHECK(std::isinf(s.Value(2)));
  CHECK(s.Value(0) == doctest::Approx(0.75 + std::sqrt(2.0) * std::sqrt(std::log(4.0) / 2.0)));
  CHECK(UcbSelect(s) == "c");

  UcbState u = UcbStateFromHistory(h, labels, UcbVariant::kUnitBonus);
  CHECK(u.Value(1) == doctest::Approx(0.1 + std::sqrt(0.5)));

  s = UcbUpdate(s, "c", -3.0);
  CHECK(UcbSelect(s) == "a");
  CHECK_THROWS_AS(UcbUpdate(s, "z", 1.0), UnknownActionError);
}

TEST_CASE("UCB tries every arm first and then concentrates on the best") {
  BanditInstance inst = MakeGaussianMab(5, 0.1, Scenario::kButton, 17, 300);
  for (int a = 0; a < 5; ++a) inst.arms[a].mean = 0.2 * a;
  BanditEnv env(inst);
  auto agent = MakeUcbAgent();
  Rng env_rng(1), agent_rng(2);
  RunOptions opt;
  opt.render_prompts = false;
  auto ep = RunEpisode(env, *agent, opt, env_rng, agent_rng);
  for (int t = 0; t < 5; ++t) CHECK(ep.steps[t].executed == t);
  int best = 0;
  for (const auto& st : ep.steps) best += st.executed == inst.OptimalArm();
  CHECK(best > 150);
}

TEST_CASE("LinUCB with alpha 0 is the per-arm ridge regression") {
  Rng rng(4);
  std::normal_distribution<double> n01;
  const int k = 3, d = 4;
  LinUcbState<double> state(k, d);
  std::vector<MatrixXd> xs(k, MatrixXd(0, d));
  std::vector<std::vector<double>> ys(k);
  for (int i = 0; i < 60; ++i) {
    int a = i % k;
    VectorXd x = VectorXd::NullaryExpr(d, [&] { return n01(rng); });
    double y = n01(rng);
    state.Update(a, x, y);
    xs[a].conservativeResize(xs[a].rows() + 1, d);
    xs[a].row(xs[a].rows() - 1) = x.transpose();
    ys[a].push_back(y);
  }
  VectorXd query = VectorXd::NullaryExpr(d, [&] { return n01(rng); });
  for (int a = 0; a < k; ++a) {
    // Oracle: theta = (X^T X + I)^{-1} X^T y by QR on the augmented system.
    MatrixXd aug(xs[a].rows() + d, d);
    aug << xs[a], MatrixXd::Identity(d, d);
    VectorXd rhs = VectorXd::Zero(aug.rows());
    for (std::size_t i = 0; i < ys[a].size(); ++i) rhs[i] = ys[a][i];
    VectorXd theta = aug.colPivHouseholderQr().solve(rhs);
    CHECK(state.Score(a, query, 0.0) == doctest::Approx(theta.dot(query)).epsilon(1e-10));
    double width = std::sqrt(query.dot((aug.transpose() * aug).inverse() * query));
    CHECK(state.Score(a, query, 2.0) ==
          doctest::Approx(theta.dot(query) + 2.0 * width).epsilon(1e-10));
  }
  CHECK_THROWS_AS(state.Score(0, VectorXd::Zero(d + 1), 1.0), ConfigError);
  CHECK_THROWS_AS(LinUcbState<double>(0, 2), ConfigError);
}

TEST_CASE("LinUCB agent learns per-user preferences") {
  auto inst = std::make_shared<ContextualInstance>(MakeContextual(5, 20, 0.05, 3, 300));
  ContextualEnv env(inst);
  auto agent = MakeLinUcbAgent(1.0);
  auto random = MakeRandomAgent();
  RunOptions opt;
  opt.render_prompts = false;
  double lin = 0.0, rnd = 0.0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    Rng e1(s), a1(s + 100), e2(s), a2(s + 100);
    lin += RunEpisode(env, *agent, opt, e1, a1).cumulative_regret.back();
    rnd += RunEpisode(env, *random, opt, e2, a2).cumulative_regret.back();
  }
  CHECK(lin < 0.75 * rnd);
}

TEST_CASE("MCTS takes an immediate win and blocks an immediate loss") {
  MctsConfig cfg;
  cfg.simulations = 2000;
  Rng rng(9);
  // Agent (1) to move; 1s on 0 and 1 complete the top row at 2.
  CHECK(MctsSelect(Board::FromString("110220000"), cfg, rng) == 2);
  // Opponent threatens the middle row at 5; the agent has no win.
  CHECK(MctsSelect(Board::FromString("100220001"), cfg, rng) == 5);
  auto visits = MctsVisitCounts(Board::FromString("110220000"), cfg, rng);
  int total = 0;
  for (int v : visits) total += v;
  CHECK(total == cfg.simulations);
  CHECK(visits[0] == 0);
}

TEST_CASE("MCTS noise replaces the search result at the configured rate") {
  MctsConfig cfg;
  cfg.simulations = 200;
  cfg.noise_p = 0.5;
  Rng rng(2);
  Board b = Board::FromString("110220000");
  int off = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) off += MctsSelect(b, cfg, rng) != 2;
  // Noise picks one of 5 legal cells uniformly, so 4/5 of noisy moves differ.
  CHECK(std::abs(off / double(n) - 0.5 * 0.8) < 0.04);
}

TEST_CASE("scripted agents") {
  std::vector<std::string> labels = {"x", "y", "z"};
  auto h = History({{"y", 0.1}, {"x", 0.9}, {"y", 0.2}});
  CHECK(ModalAction(h, labels) == 1);
  CHECK(GreedyMeanAction(h, labels) == 0);
  CHECK(ModalAction({}, labels) == -1);
  CHECK(GreedyMeanAction({}, labels) == -1);

  Rng rng(0);
  auto copycat = MakeScriptedAgent(ScriptedKind::kCopycat);
  auto greedy = MakeScriptedAgent(ScriptedKind::kGreedyMean);
  CHECK(copycat->Act(BanditContext(labels, h), rng).extracted_action == "y");
  CHECK(greedy->Act(BanditContext(labels, h), rng).extracted_action == "x");

  auto random = MakeRandomAgent();
  StepContext ctx = BanditContext(labels, h);
  ctx.legal = {"x", "z"};
  auto p = random->ExactDistribution(ctx);
  REQUIRE(p);
  CHECK((*p)[0] == doctest::Approx(0.5));
  CHECK((*p)[1] == 0.0);
  for (int i = 0; i < 50; ++i) CHECK(random->Act(ctx, rng).extracted_action != "y");
}
