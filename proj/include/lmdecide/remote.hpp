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

// Chat-completion adapter. Requests follow the common JSON schema
// {model, messages, temperature, top_p, max_tokens}; replies are read from
// choices[0].message.content.

#ifndef LMDECIDE_REMOTE_HPP_
#define LMDECIDE_REMOTE_HPP_

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "lmdecide/agent.hpp"

namespace lmdecide {

inline constexpr const char* kEndpointEnv = "LMDECIDE_ENDPOINT";
inline constexpr const char* kApiKeyEnv = "LMDECIDE_API_KEY";
inline constexpr const char* kModelEnv = "LMDECIDE_MODEL";

struct RemoteConfig {
  // Full URL of the chat-completions route.
  std::string endpoint;
  std::string api_key;
  std::string model = "default";
  double top_p = 1.0;
  int max_retries = 4;
  int backoff_ms = 250;
  int max_backoff_ms = 8000;
  int timeout_s = 120;

  // Reads the three environment variables; throws ConfigError when the
  // endpoint is unset.
  static RemoteConfig FromEnv();
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// POSTs a JSON body; throws TransportError when no response was received.
using HttpTransport = std::function<HttpResponse(const RemoteConfig&, const std::string& body)>;

HttpTransport DefaultHttpTransport();

// Append-only JSON-lines log shared by concurrent callers.
class TranscriptStore {
 public:
  explicit TranscriptStore(const std::filesystem::path& path);
  void Append(const std::string& json_line);
  int lines() const;

 private:
  mutable std::mutex mu_;
  std::ofstream out_;
  int lines_ = 0;
};

class RemoteAgent final : public Agent {
 public:
  RemoteAgent(RemoteConfig config, HttpTransport transport,
              std::shared_ptr<TranscriptStore> transcript = nullptr);

  std::string Name() const override { return "remote:" + config_.model; }
  // Sends ctx.prompt with max_tokens = ctx.budget. Transient failures
  // (no response, 429, 5xx) are retried with capped exponential backoff;
  // exhausted retries throw TransportError, malformed bodies ProtocolError.
  AgentReply Act(const StepContext& ctx, Rng& rng) override;

  const RemoteConfig& config() const { return config_; }

 private:
  RemoteConfig config_;
  HttpTransport transport_;
  std::shared_ptr<TranscriptStore> transcript_;
};

// Extracts choices[0].message.content; throws ProtocolError otherwise.
std::string ParseChatResponse(const std::string& body);
std::string BuildChatRequest(const RemoteConfig& config, const std::string& prompt,
                             int max_tokens, double temperature);

}  // namespace lmdecide

#endif  // LMDECIDE_REMOTE_HPP_
