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

#include <set>

#include "lmdecide/textio.hpp"

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

}  // namespace

TEST_CASE("number formatting") {
  CHECK(Format2(1.0) == "1.0");
  CHECK(Format2(0.456) == "0.46");
  CHECK(Format2(1.005) == "1.01");
  CHECK(Format2(-0.999) == "-1.0");
  CHECK(Format2(2.5) == "2.5");
  CHECK(Format2(std::nan("")) == "NaN");
  CHECK(Round2(-1.915) == -1.92);
  CHECK(FormatExact(0.1) == "0.1");
  CHECK(std::stod(FormatExact(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("string and token helpers") {
  CHECK(Trim("  a b \n") == "a b");
  CHECK(ToLower("AbC") == "abc");
  CHECK(SplitWhitespace(" a  b\tc\n") == std::vector<std::string>{"a", "b", "c"});
  CHECK(CountTokens("one two  three") == 3);
  CHECK(CountTokens("") == 0);
  CHECK(CountTokens(TruncateTokens("a b c d e", 3)) == 3);
  CHECK(TruncateTokens("a b", 5) == "a b");
  CHECK(FillTemplate("{x} and {y} but {z}", {{"x", "1"}, {"y", "2"}}) == "1 and 2 but {z}");
}

TEST_CASE("hashing and seeding") {
  CHECK(Sha256Hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Sha256 h;
  h.Update("a");
  h.Update("bc");
  CHECK(h.HexDigest() == Sha256Hex("abc"));
  CHECK(SubSeed(1, "x") == SubSeed(1, "x"));
  CHECK(SubSeed(1, "x") != SubSeed(2, "x"));
  CHECK(SubSeed(1, "x") != SubSeed(1, "y"));
  Rng rng = SubStream(5, "s");
  rng.discard(17);
  Rng copy = DeserializeRng(SerializeRng(rng));
  CHECK(copy() == rng());
  CHECK_THROWS_AS(DeserializeRng("garbage"), ConfigError);
}

TEST_CASE("action extraction") {
  std::vector<std::string> colors = {"blue", "green", "red"};
  auto last = ExtractAction("ACTION=red ... actually ACTION=green", colors);
  CHECK(last.valid);
  CHECK(last.action == "green");
  CHECK(ExtractAction("action = Blue.", colors).action == "blue");
  CHECK(ExtractAction("Final: ACTION=**red**", colors).action == "red");
  CHECK(ExtractAction("ACTION=(green)!", colors).action == "green");
  CHECK_FALSE(ExtractAction("ACTION=purple", colors).valid);
  CHECK_FALSE(ExtractAction("I pick red", colors).valid);
  // A later unparseable match wins over an earlier valid one.
  CHECK_FALSE(ExtractAction("ACTION=red then ACTION=maybe", colors).valid);
  std::vector<std::string> digits = {"0", "1", "10"};
  CHECK(ExtractAction("ACTION=10", digits).action == "10");
  CHECK(ExtractAction("ACTION=1.", digits).action == "1");
}

TEST_CASE("history lines per environment kind") {
  Transition t;
  t.step = 3;
  t.action = "blue";
  t.reward = 0.456;
  CHECK(RenderHistoryLine(t, EnvKind::kBandit) == "Step=3 Action=blue Reward=0.46");
  t.state = "102010002";
  t.action = "4";
  t.reward = 0.0;
  CHECK(RenderHistoryLine(t, EnvKind::kTicTacToe) == "Step=3 State=102010002 Action=4 Reward=0");
  t.state = "This person is a 30-year-old man";
  t.action = "Heat";
  t.reward = 1.0;
  CHECK(RenderHistoryLine(t, EnvKind::kContextual) ==
        "Step=3 This person is a 30-year-old man Action=Heat Reward=1.0");
  CHECK(RenderHistory({}, EnvKind::kBandit) == "What do you predict next?");
}

TEST_CASE("bandit prompt layout") {
  auto labels = std::vector<std::string>{"blue", "green"};
  PromptParts parts;
  parts.input_instructions = BanditInstructions(Scenario::kButton, labels, 50);
  parts.history = Pulls({{"blue", 1.0}, {"green", 0.25}});
  std::string prompt = BuildPrompt(parts, PromptOptions{}, labels);
  CHECK(prompt.find("You are a bandit algorithm in a room with 2 buttons labeled blue, green.") == 0);
  CHECK(prompt.find("You have 50 time steps") != std::string::npos);
  std::string tail =
      "So far you have tried/seen:\nStep=0 Action=blue Reward=1.0\n"
      "Step=1 Action=green Reward=0.25\nWhat do you predict next?";
  CHECK(prompt.size() > tail.size());
  CHECK(prompt.substr(prompt.size() - tail.size()) == tail);
  CHECK(prompt.find(OutputInstructions(true)) != std::string::npos);

  PromptOptions nocot;
  nocot.cot = false;
  CHECK(BuildPrompt(parts, nocot, labels).find("Output ONLY your final answer") !=
        std::string::npos);

  std::string numeric = BanditInstructions(Scenario::kNumeric, std::vector<std::string>{"0", "1"}, 20);
  CHECK(numeric.find("2 arms labeled 0,1.") != std::string::npos);
}

TEST_CASE("windowing and the context budget") {
  std::vector<std::pair<std::string, double>> pulls;
  for (int i = 0; i < 30; ++i) pulls.push_back({"a", 0.5});
  PromptParts parts;
  parts.input_instructions = "Short instructions.";
  parts.history = Pulls(pulls);
  parts.window = 5;
  std::string windowed = BuildPrompt(parts, PromptOptions{});
  CHECK(windowed.find("Step=24 ") == std::string::npos);
  CHECK(windowed.find("Step=25 ") != std::string::npos);

  parts.window = -1;
  PromptOptions tight;
  tight.context_budget = CountTokens(BuildPrompt(parts, PromptOptions{})) - 8;
  std::string cut = BuildPrompt(parts, tight);
  CHECK(CountTokens(cut) <= tight.context_budget);
  CHECK(cut.find("Step=0 ") == std::string::npos);
  CHECK(cut.find("Step=29 ") != std::string::npos);

  tight.context_budget = 3;
  CHECK_THROWS_AS(BuildPrompt(parts, tight), ContextOverflowError);
}

TEST_CASE("summary and label randomization") {
  std::vector<std::string> labels = {"blue", "green", "red"};
  auto h = Pulls({{"blue", 1.0}, {"blue", 0.0}, {"red", 0.3}});
  CHECK(SummarizeContext(h, labels) ==
        "Summary of the history so far:\nblue: count=2 mean=0.5\ngreen: count=0\n"
        "red: count=1 mean=0.3");
  PromptParts parts;
  parts.input_instructions = "x";
  parts.history = h;
  PromptOptions with_summary;
  with_summary.summary = true;
  CHECK(BuildPrompt(parts, with_summary, labels).find("Summary of the history so far:") !=
        std::string::npos);

  Rng rng(3);
  bool moved = false;
  for (int i = 0; i < 20; ++i) {
    RandomizedContext rc = RandomizeContext(parts, labels, rng);
    std::set<std::string> shown;
    for (const auto& l : labels) {
      shown.insert(rc.mapping.ToShown(l));
      CHECK(rc.mapping.ToOriginal(rc.mapping.ToShown(l)) == l);
    }
    CHECK(shown.size() == labels.size());
    for (std::size_t j = 0; j < h.size(); ++j) {
      CHECK(rc.parts.history[j].action == rc.mapping.ToShown(h[j].action));
      CHECK(rc.parts.history[j].reward == h[j].reward);
    }
    moved = moved || !rc.mapping.IsIdentity();
  }
  CHECK(moved);
  CHECK(IdentityMapping(labels).IsIdentity());
}

TEST_CASE("tic-tac-toe instructions show the board and optional legal moves") {
  Board b = Board::FromString("102010002");
  std::string with = TicTacToeInstructions(b, true);
  CHECK(with.find("102\n010\n002") != std::string::npos);
  CHECK(with.find("Legal actions: 1, 3, 5, 6, 7") != std::string::npos);
  CHECK(TicTacToeInstructions(b, false).find("Legal actions") == std::string::npos);
  CHECK(ContextualInstructions(std::vector<std::string>{"A", "B"}).find("named A, B.") !=
        std::string::npos);
}
