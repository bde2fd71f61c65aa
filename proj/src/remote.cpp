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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "lmdecide/remote.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <thread>
#include <utility>

#include <httplib.h>
#include <json.hpp>

namespace lmdecide {

using nlohmann::json;

RemoteConfig RemoteConfig::FromEnv() {
  RemoteConfig c;
  const char* endpoint = std::getenv(kEndpointEnv);
  if (endpoint == nullptr || *endpoint == '\0') {
    throw ConfigError(std::string(kEndpointEnv) + " is not set");
  }
  c.endpoint = endpoint;
  if (const char* key = std::getenv(kApiKeyEnv)) c.api_key = key;
  if (const char* model = std::getenv(kModelEnv); model && *model) c.model = model;
  return c;
}

HttpTransport DefaultHttpTransport() {
  return [](const RemoteConfig& config, const std::string& body) {
    const std::string& url = config.endpoint;
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint needs a scheme: " + url);
    auto slash = url.find('/', scheme + 3);
    std::string base = url.substr(0, slash);
    std::string path = slash == std::string::npos ? "/" : url.substr(slash);
    httplib::Client client(base);
    client.set_connection_timeout(config.timeout_s, 0);
    client.set_read_timeout(config.timeout_s, 0);
    httplib::Headers headers;
    if (!config.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config.api_key);
    }
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
    return HttpResponse{res->status, res->body};
  };
}

TranscriptStore::TranscriptStore(const std::filesystem::path& path)
    : out_(path, std::ios::app) {
  if (!out_) throw ConfigError("cannot open transcript " + path.string());
}

void TranscriptStore::Append(const std::string& json_line) {
  std::lock_guard<std::mutex> lock(mu_);
  out_ << json_line << '\n';
  out_.flush();
  ++lines_;
}

int TranscriptStore::lines() const {
  std::lock_guard<std::mutex> lock(mu_);
  return lines_;
}

std::string BuildChatRequest(const RemoteConfig& config, const std::string& prompt,
                             int max_tokens, double temperature) {
  json req = {
      {"model", config.model},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", temperature},
      {"top_p", config.top_p},
      {"max_tokens", max_tokens},
  };
  return req.dump();
}

std::string ParseChatResponse(const std::string& body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw ProtocolError("response is not JSON");
  try {
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ProtocolError("message content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("unexpected response shape: ") + e.what());
  }
}

RemoteAgent::RemoteAgent(RemoteConfig config, HttpTransport transport,
                         std::shared_ptr<TranscriptStore> transcript)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      transcript_(std::move(transcript)) {
  if (config_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

AgentReply RemoteAgent::Act(const StepContext& ctx, Rng&) {
  std::string request = BuildChatRequest(config_, ctx.prompt, ctx.budget, ctx.temperature);
  int delay = config_.backoff_ms;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0 && delay > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      delay = std::min(delay * 2, config_.max_backoff_ms);
    }
    HttpResponse res;
    try {
      res = transport_(config_, request);
    } catch (const TransportError& e) {
      last_error = e.what();
      continue;
    }
    if (transcript_) {
      json rec = {{"attempt", attempt},
                  {"request", json::parse(request)},
                  {"status", res.status},
                  {"response", res.body}};
      transcript_->Append(rec.dump());
    }
    if (res.status == 429 || res.status >= 500) {
      last_error = "HTTP " + std::to_string(res.status);
      continue;
    }
    if (res.status != 200) {
      throw ProtocolError("HTTP " + std::to_string(res.status) + ": " + res.body);
    }
    std::string text = TruncateTokens(ParseChatResponse(res.body), ctx.budget);
    return MakeReply(std::move(text), ctx.ActionSet());
  }
  throw TransportError("retries exhausted: " + last_error);
}

}  // namespace lmdecide
