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

#include "stereosim/llm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "stereosim/hash.hpp"

namespace stereosim {

namespace {

using nlohmann::json;

json request_body(const LlmEndpoint& ep, const std::vector<ChatMessage>& messages) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return json{{"model", ep.model}, {"messages", msgs}, {"temperature", ep.temperature}};
}

std::string extract_content(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
      !j["choices"][0].contains("message") ||
      !j["choices"][0]["message"].contains("content"))
    throw TransportError("malformed chat-completion response", /*fatal=*/true);
  return j["choices"][0]["message"]["content"].get<std::string>();
}

struct SplitUrl {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // possibly empty
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("endpoint URL must include a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpLlmClient : public LlmClient {
 public:
  HttpLlmClient(const LlmEndpoint& ep, const BackoffPolicy& bp, TransportSink* sink)
      : ep_(ep), bp_(bp), sink_(sink) {
    if (!ep_.api_key_env.empty()) {
      const char* key = std::getenv(ep_.api_key_env.c_str());
      if (key == nullptr || *key == '\0')
        throw ConfigError("missing credential environment variable: " + ep_.api_key_env);
      api_key_ = key;
    }
  }

  std::string chat(const std::vector<ChatMessage>& messages) override {
    const json body = request_body(ep_, messages);
    const std::string body_text = body.dump();
    const SplitUrl url = split_url(ep_.base_url);
    const std::string path = url.path_prefix + "/chat/completions";

    for (int attempt = 1; attempt <= bp_.max_attempts; ++attempt) {
      httplib::Client cli(url.origin);
      cli.set_connection_timeout(10);
      cli.set_read_timeout(120);
      httplib::Headers headers;
      if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

      auto res = cli.Post(path, headers, body_text, "application/json");
      TransportRecord rec;
      rec.request = body_text;
      rec.attempts = attempt;
      if (res) {
        rec.status = res->status;
        rec.response = res->body;
      } else {
        rec.status = 0;
        rec.response = "transport error: " + httplib::to_string(res.error());
      }
      if (sink_) sink_->record_transport(rec);

      if (res && res->status == 200) return extract_content(res->body);
      if (res && res->status >= 400 && res->status < 500 && res->status != 429)
        throw TransportError("chat request failed with HTTP " +
                                 std::to_string(res->status) + ": " + res->body,
                             /*fatal=*/true);
      if (attempt == bp_.max_attempts) break;

      int delay_ms = static_cast<int>(bp_.base_ms * std::pow(bp_.factor, attempt - 1));
      if (res && res->has_header("Retry-After")) {
        // Server retry hints win over the default schedule.
        int hinted = std::atoi(res->get_header_value("Retry-After").c_str());
        if (hinted > 0) delay_ms = hinted * 1000;
      }
      if (bp_.sleep)
        bp_.sleep(delay_ms);
      else
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
    }
    throw TransportError("chat request retries exhausted", /*fatal=*/false);
  }

 private:
  LlmEndpoint ep_;
  BackoffPolicy bp_;
  TransportSink* sink_;
  std::string api_key_;
};

class FixtureLlmClient : public LlmClient {
 public:
  FixtureLlmClient(const LlmEndpoint& ep, std::string dir, TransportSink* sink)
      : ep_(ep), dir_(std::move(dir)), sink_(sink) {}

  std::string chat(const std::vector<ChatMessage>& messages) override {
    const std::string fp = request_fingerprint(ep_, messages);
    const std::string path = dir_ + "/" + fp + ".json";
    std::ifstream in(path);
    if (!in)
      throw TransportError("no fixture recorded for request " + fp + " (" + path + ")",
                           /*fatal=*/true);
    std::stringstream ss;
    ss << in.rdbuf();
    TransportRecord rec;
    rec.request = request_body(ep_, messages).dump();
    rec.response = ss.str();
    rec.status = 200;
    rec.attempts = 1;
    if (sink_) sink_->record_transport(rec);
    return extract_content(rec.response);
  }

 private:
  LlmEndpoint ep_;
  std::string dir_;
  TransportSink* sink_;
};

}  // namespace

std::string request_fingerprint(const LlmEndpoint& ep,
                                const std::vector<ChatMessage>& messages) {
  return fnv1a64_hex(request_body(ep, messages).dump());
}

std::unique_ptr<LlmClient> make_http_client(const LlmEndpoint& ep, const BackoffPolicy& bp,
                                            TransportSink* sink) {
  return std::make_unique<HttpLlmClient>(ep, bp, sink);
}

std::unique_ptr<LlmClient> make_fixture_client(const LlmEndpoint& ep,
                                               const std::string& fixture_dir,
                                               TransportSink* sink) {
  return std::make_unique<FixtureLlmClient>(ep, fixture_dir, sink);
}

}  // namespace stereosim
