/*
 * Copyright 2026 The stereosim Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef STEREOSIM_LLM_CLIENT_HPP
#define STEREOSIM_LLM_CLIENT_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "stereosim/types.hpp"

namespace stereosim {

struct ChatMessage {
  std::string role;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

// Transport error with retry classification. 4xx responses are configuration
// errors and fail fast; 5xx and timeouts are retried with exponential backoff.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool fatal) : Error(what), fatal_(fatal) {}
  bool fatal() const { return fatal_; }

 private:
  bool fatal_;
};

struct TransportRecord {
  std::string request;   // JSON text, credentials never included
  std::string response;  // JSON text of the final response (or error note)
  int status = 0;
  int attempts = 0;
  bool operator==(const TransportRecord&) const = default;
};

// Receives transport records for inclusion in the run log.
class TransportSink {
 public:
  virtual ~TransportSink() = default;
  virtual void record_transport(const TransportRecord& rec) = 0;
};

struct BackoffPolicy {
  int base_ms = 1000;
  double factor = 2.0;
  int max_attempts = 5;
  // Injectable for tests; defaults to a real sleep.
  std::function<void(int)> sleep;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string chat(const std::vector<ChatMessage>& messages) = 0;
};

// Single chat-completion request over the standard JSON wire format:
// request {model, messages[{role, content}], temperature},
// response {choices[{message{content}}]}.
struct LlmEndpoint {
  std::string base_url;  // e.g. http://host:port/v1
  std::string model;
  double temperature = 0.0;
  std::string api_key_env;  // name of the environment variable with the key
};

// Fingerprint of a request body, used to key fixture files.
std::string request_fingerprint(const LlmEndpoint& ep,
                                const std::vector<ChatMessage>& messages);

// HTTP client. Missing credential environment variables raise ConfigError at
// construction, naming the variable.
std::unique_ptr<LlmClient> make_http_client(const LlmEndpoint& ep, const BackoffPolicy& bp,
                                            TransportSink* sink);

// Offline replay from a directory of <fingerprint>.json fixture files, each
// holding the response body of a recorded request.
std::unique_ptr<LlmClient> make_fixture_client(const LlmEndpoint& ep,
                                               const std::string& fixture_dir,
                                               TransportSink* sink);

}  // namespace stereosim

#endif  // STEREOSIM_LLM_CLIENT_HPP
