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

#include <deque>

#include "lmdecide/episode.hpp"
#include "lmdecide/exploration.hpp"

using namespace lmdecide;

namespace {

// Replays canned replies in order.
class Scripted final : public Agent {
 public:
  explicit Scripted(std::deque<std::string> replies) : replies_(std::move(replies)) {}
  std::string Name() const override { return "scripted"; }
  AgentReply Act(const StepContext& ctx, Rng&) override {
    prompts.push_back(ctx.prompt);
    std::string text = replies_.front();
    replies_.pop_front();
    return MakeReply(text, ctx.ActionSet());
  }
  std::vector<std::string> prompts;

 private:
  std::deque<std::string> replies_;
};

// Always answers with one label.
class Fixed final : public Agent {
 public:
  explicit Fixed(std::string label) : label_(std::move(label)) {}
  std::string Name() const override { return "fixed"; }
  AgentReply Act(const StepContext& ctx, Rng&) override {
    return MakeReply("ACTION=" + label_, ctx.ActionSet());
  }
  std::optional<VectorXd> ExactDistribution(const StepContext& ctx) const override {
    VectorXd p = VectorXd::Zero(static_cast<int>(ctx.labels.size()));
    p[ctx.LabelIndex(label_)] = 1.0;
    return p;
  }

 private:
  std::string label_;
};

StepContext Ctx(int step, std::vector<std::string> tried) {
  StepContext ctx;
  ctx.labels = {"a", "b", "c", "d"};
  ctx.step = step;
  for (const auto& a : tried) {
    Transition t;
    t.action = a;
    ctx.history.push_back(t);
  }
  return ctx;
}

}  // namespace

TEST_CASE("mechanism lists parse in order and validate") {
  auto m = ParseMechanisms("try-all, epsilon_greedy ,self_consistency", 0.2, 5, 1.0);
  REQUIRE(m.size() == 3);
  CHECK(m[0].kind == MechanismKind::kTryAll);
  CHECK(m[1].epsilon == 0.2);
  CHECK(m[2].n_consistency == 5);
  CHECK(ParseMechanisms("none", 0.1, 1, 1.0).empty());
  CHECK_THROWS_AS(ParseMechanisms("bogus", 0.1, 1, 1.0), ConfigError);
  CHECK_THROWS_AS(ParseMechanisms("epsilon_greedy", 1.5, 1, 1.0), ConfigError);
  CHECK_THROWS_AS(ParseMechanisms("self_consistency", 0.1, 0, 1.0), ConfigError);
  auto agent = ApplyMechanisms(std::make_shared<Fixed>("a"), m);
  CHECK(agent->Name() == "try_all(epsilon_greedy(self_consistency(fixed)))");

  PromptOptions opt;
  ApplyPromptMechanisms(ParseMechanisms("context_summary,context_randomization", 0.1, 1, 1.0), opt);
  CHECK(opt.summary);
  CHECK(opt.randomize);
  CHECK(ExplorationBonus(ParseMechanisms("exploration_bonus", 0.1, 1, 2.5)) == 2.5);
  CHECK(ExplorationBonus({}) == 0.0);
}

TEST_CASE("try-all plays untried actions during the first k steps") {
  auto agent = WrapTryAll(std::make_shared<Fixed>("a"));
  Rng rng(0);
  auto r = agent->Act(Ctx(2, {"a", "c"}), rng);
  CHECK(r.extracted_action == "b");
  CHECK(r.raw_text == TryAllRationale("b"));
  CHECK(agent->Act(Ctx(4, {"a", "b", "c", "a"}), rng).extracted_action == "a");
  StepContext legal = Ctx(1, {"a"});
  legal.legal = {"a", "d"};
  CHECK(agent->Act(legal, rng).extracted_action == "d");
  auto p = agent->ExactDistribution(Ctx(0, {}));
  REQUIRE(p);
  CHECK((*p)[0] == 1.0);
}

TEST_CASE("epsilon-greedy mixes in uniform actions") {
  const double eps = 0.3;
  auto agent = WrapEpsilonGreedy(std::make_shared<Fixed>("a"), eps);
  StepContext ctx = Ctx(5, {});
  auto p = agent->ExactDistribution(ctx);
  REQUIRE(p);
  CHECK((*p)[0] == doctest::Approx(1 - eps + eps / 4));
  CHECK((*p)[3] == doctest::Approx(eps / 4));
  Rng rng(7);
  const int n = 40000;
  int others = 0;
  for (int i = 0; i < n; ++i) others += agent->Act(ctx, rng).extracted_action != "a";
  CHECK(std::abs(others / double(n) - 0.75 * eps) < 0.01);
  CHECK_THROWS_AS(WrapEpsilonGreedy(std::make_shared<Fixed>("a"), -0.1), ConfigError);
}

TEST_CASE("self-correction keeps both generations and trains on the second") {
  auto inner = std::make_shared<Scripted>(std::deque<std::string>{"ACTION=a", "ACTION=b"});
  auto agent = WrapSelfCorrection(inner);
  Rng rng(0);
  StepContext ctx = Ctx(0, {});
  ctx.prompt = "P";
  auto r = agent->Act(ctx, rng);
  CHECK(r.extracted_action == "b");
  REQUIRE(r.generations.size() == 2);
  CHECK_FALSE(r.generations[0].trainable);
  CHECK(r.generations[1].trainable);
  CHECK(inner->prompts[1] == "P\n\nACTION=a\n\n" + SelfCorrectionMessage());

  auto fallback = WrapSelfCorrection(
      std::make_shared<Scripted>(std::deque<std::string>{"ACTION=c", "no idea"}));
  auto f = fallback->Act(ctx, rng);
  CHECK(f.valid);
  CHECK(f.extracted_action == "c");
}

TEST_CASE("self-consistency returns a majority generation") {
  auto inner = std::make_shared<Scripted>(
      std::deque<std::string>{"ACTION=b", "ACTION=a", "ACTION=a", "junk", "ACTION=a"});
  auto agent = WrapSelfConsistency(inner, 5);
  Rng rng(0);
  auto r = agent->Act(Ctx(0, {}), rng);
  CHECK(r.extracted_action == "a");
  REQUIRE(r.generations.size() == 5);
  int trainable = 0;
  for (const auto& g : r.generations) trainable += g.trainable;
  CHECK(trainable == 1);
  CHECK(r.generations[1].trainable);
  CHECK_THROWS_AS(WrapSelfConsistency(inner, 0), ConfigError);
}

TEST_CASE("exploration bonus is paid once per action") {
  EpisodeState state(3);
  CHECK(ShapeExplorationBonus(0.5, 1, state, 1.0) == 1.5);
  CHECK(ShapeExplorationBonus(0.5, 1, state, 1.0) == 0.5);
  CHECK(ShapeExplorationBonus(0.5, 2, state, 1.0) == 1.5);
  CHECK(ShapeExplorationBonus(0.5, 7, state, 1.0) == 0.5);
}

TEST_CASE("invalid replies fall back to a uniform legal action") {
  BanditEnv env(MakeGaussianMab(4, 1.0, Scenario::kButton, 2, 10));
  std::deque<std::string> replies(10, "I refuse");
  replies[3] = "ACTION=red";
  Scripted agent(replies);
  RunOptions opt;
  Rng env_rng(1), agent_rng(2);
  auto ep = RunEpisode(env, agent, opt, env_rng, agent_rng);
  CHECK(ep.invalid_count == 9);
  CHECK(ep.steps[3].valid);
  CHECK(ep.steps[3].executed == 0);
  CHECK_FALSE(ep.steps[0].valid);
  CHECK(ep.steps[0].generated == -1);
}

TEST_CASE("over-budget replies are truncated before extraction") {
  BanditEnv env(MakeGaussianMab(3, 1.0, Scenario::kButton, 2, 1));
  Scripted agent({"one two three four ACTION=green"});
  RunOptions opt;
  opt.budget = 4;
  Rng env_rng(1), agent_rng(2);
  auto ep = RunEpisode(env, agent, opt, env_rng, agent_rng);
  CHECK_FALSE(ep.steps[0].valid);
  CHECK(Trim(ep.steps[0].reply.raw_text) == "one two three four");
}

TEST_CASE("randomized labels are mapped back before execution") {
  BanditEnv env(MakeGaussianMab(5, 1.0, Scenario::kButton, 2, 20));
  auto agent = WrapTryAll(std::make_shared<Fixed>("red"));
  RunOptions opt;
  opt.prompt.randomize = true;
  Rng env_rng(1), agent_rng(2);
  auto ep = RunEpisode(env, *agent, opt, env_rng, agent_rng);
  for (const auto& st : ep.steps) {
    REQUIRE(st.generated >= 0);
    CHECK(st.executed == st.shown_to_env[st.generated]);
  }
}
