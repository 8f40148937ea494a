// Copyright 2026 The Horizon Authors
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

#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>

#include "horizon/agents.hpp"

namespace horizon {

/// Reads the API key from the configured environment variable. Keys are
/// never taken from configuration files.
inline std::string llm_api_key(const LlmClientConfig& config)
{
  const char* value = std::getenv(config.api_key_env.c_str());
  return value ? std::string(value) : std::string{};
}

/// POSTs chat requests with httplib. HTTPS endpoints need a build with
/// CPPHTTPLIB_OPENSSL_SUPPORT.
inline ChatTransport http_chat_transport(const LlmClientConfig& config)
{
  return [config](const json& request) -> std::string {
    httplib::Client client(config.base_url);
    client.set_connection_timeout(config.timeout_s, 0);
    client.set_read_timeout(config.timeout_s, 0);
    httplib::Headers headers;
    const std::string key = llm_api_key(config);
    if (!key.empty())
      headers.emplace("Authorization", "Bearer " + key);
    auto res = client.Post(config.path, headers, request.dump(), "application/json");
    if (!res)
      throw TransportError(
        "chat endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status));
    return res->body;
  };
}

inline void to_json(json& j, const LlmClientConfig& c)
{
  j = json{{"base_url", c.base_url},
           {"path", c.path},
           {"model", c.model},
           {"temperature", c.temperature},
           {"max_tokens", c.max_tokens},
           {"system_prompt", c.system_prompt},
           {"user_prompt", c.user_prompt},
           {"timeout_s", c.timeout_s},
           {"api_key_env", c.api_key_env},
           {"max_retries", c.max_retries}};
}

inline void from_json(const json& j, LlmClientConfig& c)
{
  const LlmClientConfig d;
  c.base_url = j.value("base_url", d.base_url);
  c.path = j.value("path", d.path);
  c.model = j.value("model", d.model);
  c.temperature = j.value("temperature", d.temperature);
  c.max_tokens = j.value("max_tokens", d.max_tokens);
  c.system_prompt = j.value("system_prompt", d.system_prompt);
  c.user_prompt = j.value("user_prompt", d.user_prompt);
  c.timeout_s = j.value("timeout_s", d.timeout_s);
  c.api_key_env = j.value("api_key_env", d.api_key_env);
  c.max_retries = j.value("max_retries", d.max_retries);
  if (j.contains("api_key"))
    throw std::invalid_argument(
      "API keys belong in the environment variable named by api_key_env");
}

} // namespace horizon
