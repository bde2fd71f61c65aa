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

#include <cstdlib>
#include <deque>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "lmdecide/episode.hpp"
#include "lmdecide/remote.hpp"

using namespace lmdecide;

namespace {

std::string Reply(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"content", content}}}}}}}.dump();
}

// Serves queued responses; an empty body with status 0 simulates a dropped
// connection.
struct Queue {
  std::deque<HttpResponse> responses;
  std::vector<std::string> requests;

  HttpTransport transport() {
    return [this](const RemoteConfig&, const std::string& body) {
      requests.push_back(body);
      REQUIRE_FALSE(responses.empty());
      HttpResponse r = responses.front();
      responses.pop_front();
      if (r.status == 0) throw TransportError("connection reset");
      return r;
    };
  }
};

RemoteConfig TestConfig() {
  RemoteConfig c;
  c.endpoint = "http://localhost:1/v1/chat/completions";
  c.model = "stub";
  c.max_retries = 3;
  c.backoff_ms = 0;
  return c;
}

StepContext Ctx() {
  StepContext ctx;
  ctx.prompt = "pick a button";
  ctx.labels = {"red", "green", "blue"};
  ctx.budget = 8;
  ctx.temperature = 0.5;
  return ctx;
}

}  // namespace

TEST_CASE("chat requests carry the sampling settings") {
  RemoteConfig c = TestConfig();
  c.top_p = 0.9;
  auto j = nlohmann::json::parse(BuildChatRequest(c, "hello", 32, 0.7));
  CHECK(j["model"] == "stub");
  CHECK(j["messages"][0]["role"] == "user");
  CHECK(j["messages"][0]["content"] == "hello");
  CHECK(j["max_tokens"] == 32);
  CHECK(j["temperature"] == 0.7);
  CHECK(j["top_p"] == 0.9);
}

TEST_CASE("chat responses") {
  CHECK(ParseChatResponse(Reply("ACTION=red")) == "ACTION=red");
  CHECK_THROWS_AS(ParseChatResponse("{"), ProtocolError);
  CHECK_THROWS_AS(ParseChatResponse(R"({"choices":[]})"), ProtocolError);
  CHECK_THROWS_AS(ParseChatResponse(R"({"choices":[{"message":{}}]})"), ProtocolError);
}

TEST_CASE("transient failures are retried") {
  Queue q;
  q.responses = {{0, ""}, {429, "slow down"}, {503, "busy"}, {200, Reply("ACTION=blue")}};
  RemoteAgent agent(TestConfig(), q.transport());
  Rng rng(0);
  AgentReply r = agent.Act(Ctx(), rng);
  CHECK(r.valid);
  CHECK(*r.extracted_action == "blue");
  CHECK(q.requests.size() == 4);
  CHECK(q.requests[0] == q.requests[3]);
  CHECK(agent.Name() == "remote:stub");
}

TEST_CASE("retries are bounded") {
  Queue q;
  q.responses = {{500, ""}, {502, ""}, {0, ""}, {429, ""}, {200, Reply("ACTION=red")}};
  RemoteAgent agent(TestConfig(), q.transport());
  Rng rng(0);
  CHECK_THROWS_AS(agent.Act(Ctx(), rng), TransportError);
  CHECK(q.requests.size() == 4);
}

TEST_CASE("client errors and malformed bodies are not retried") {
  Queue q;
  q.responses = {{400, "bad request"}, {200, "<html>"}};
  RemoteAgent agent(TestConfig(), q.transport());
  Rng rng(0);
  CHECK_THROWS_AS(agent.Act(Ctx(), rng), ProtocolError);
  CHECK(q.requests.size() == 1);
  CHECK_THROWS_AS(agent.Act(Ctx(), rng), ProtocolError);
  CHECK(q.requests.size() == 2);
}

TEST_CASE("replies are cut to the generation budget") {
  Queue q;
  q.responses = {{200, Reply("a b c d e f g h ACTION=red")}, {200, Reply("ACTION=purple")}};
  RemoteAgent agent(TestConfig(), q.transport());
  Rng rng(0);
  AgentReply r = agent.Act(Ctx(), rng);
  CHECK_FALSE(r.valid);
  CHECK(r.raw_text.find("ACTION") == std::string::npos);
  AgentReply outside = agent.Act(Ctx(), rng);
  CHECK_FALSE(outside.valid);
}

TEST_CASE("every attempt is written to the transcript") {
  auto path = std::filesystem::temp_directory_path() / "lmdecide_remote_transcript.jsonl";
  std::filesystem::remove(path);
  {
    auto store = std::make_shared<TranscriptStore>(path);
    Queue q;
    q.responses = {{503, ""}, {200, Reply("ACTION=green")}};
    RemoteAgent agent(TestConfig(), q.transport(), store);
    Rng rng(0);
    agent.Act(Ctx(), rng);
    CHECK(store->lines() == 2);
  }
  std::ifstream in(path);
  std::string line;
  std::vector<nlohmann::json> recs;
  while (std::getline(in, line)) recs.push_back(nlohmann::json::parse(line));
  REQUIRE(recs.size() == 2);
  CHECK(recs[0]["status"] == 503);
  CHECK(recs[1]["attempt"] == 1);
  CHECK(recs[1]["request"]["max_tokens"] == 8);
  std::filesystem::remove(path);
}

TEST_CASE("configuration from the environment") {
  ::unsetenv(kEndpointEnv);
  CHECK_THROWS_AS(RemoteConfig::FromEnv(), ConfigError);
  ::setenv(kEndpointEnv, "http://example.invalid/v1/chat/completions", 1);
  ::setenv(kModelEnv, "m1", 1);
  ::setenv(kApiKeyEnv, "k", 1);
  RemoteConfig c = RemoteConfig::FromEnv();
  CHECK(c.endpoint == "http://example.invalid/v1/chat/completions");
  CHECK(c.model == "m1");
  CHECK(c.api_key == "k");
  ::unsetenv(kEndpointEnv);
  ::unsetenv(kModelEnv);
  ::unsetenv(kApiKeyEnv);
}

TEST_CASE("unusable remote replies fall back inside an episode") {
  BanditEnv env(MakeGaussianMab(4, 1.0, Scenario::kButton, 2, 6));
  Queue q;
  for (int i = 0; i < 6; ++i) {
    q.responses.push_back({200, Reply(i % 2 == 0 ? "ACTION=yellow" : "no idea")});
  }
  RemoteAgent agent(TestConfig(), q.transport());
  RunOptions opt;
  opt.budget = 16;
  Rng env_rng(1), agent_rng(2);
  auto ep = RunEpisode(env, agent, opt, env_rng, agent_rng);
  CHECK(ep.invalid_count == 3);
  for (int t = 0; t < 6; t += 2) CHECK(ep.steps[t].executed == 3);
  for (int t = 1; t < 6; t += 2) {
    CHECK_FALSE(ep.steps[t].valid);
    CHECK(ep.steps[t].executed >= 0);
    CHECK(ep.steps[t].executed < 4);
  }
}
