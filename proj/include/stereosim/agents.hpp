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

#ifndef STEREOSIM_AGENTS_HPP
#define STEREOSIM_AGENTS_HPP

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stereosim/llm_client.hpp"
#include "stereosim/types.hpp"

namespace stereosim::agents {

inline constexpr int kMessageBudget = 3;

// One agent's view at interaction time: its visible history plus its own
// current assignment and outcome. The event span points into engine-owned
// storage that stays stable for the duration of the call.
struct Observation {
  AgentId agent;
  int episode = 0;
  std::span<const Event> visible_events;
  TaskType own_assignment;
  Outcome own_outcome = Outcome::Failure;
};

struct OutMessage {
  Channel channel = GlobalChannel{};
  std::string body;
  std::optional<SentimentTag> sentiment;
  bool operator==(const OutMessage&) const = default;
};

struct AgentAction {
  std::string thought;
  std::vector<OutMessage> messages;  // at most kMessageBudget entries
  bool operator==(const AgentAction&) const = default;
};

// Context for the peer-evaluation call of a backend.
struct PeerContext {
  AgentId evaluator;
  AgentId subject;
  std::span<const Event> visible_events;
  std::vector<TaskType> tasks;
  std::string prompt;          // P(evaluator, subject), used by LLM backends
  int round_episode = 0;       // phase end episode of the round
};

class BackendError : public Error {
 public:
  using Error::Error;
};

// A decision backend. Scripted backends are pure functions of (policy seed,
// input); they never mutate shared state and tolerate interleaved calls.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual AgentAction react_cycle(const Observation& obs) = 0;
  virtual std::string assess_peer(const PeerContext& ctx) = 0;
};

// ---------------------------------------------------------------------------
// fc_caller: directive mini-grammar between raw model text and AgentAction
// ---------------------------------------------------------------------------
//
//   SEND_TO person_k[ <tag>]: body
//   SEND_GROUP person_a,person_b[ <tag>]: body
//   SEND_ALL[ <tag>]: body
// with the optional sentiment tag
//   [praise person_j as task_id] | [criticize person_j as task_id]
// Non-directive lines accumulate into the thought.

struct FcContext {
  int self = 0;      // sender index
  int n_agents = 0;  // group channels need 2 <= k < n
};

struct FcResult {
  AgentAction action;
  std::vector<std::string> issues;  // dropped/malformed directives
  bool ok = true;                   // false only when nothing was recognizable
};

FcResult fc_parse(const std::string& raw, const FcContext& ctx);
std::string fc_render(const AgentAction& action);

// ---------------------------------------------------------------------------
// Sentiment/evidence tallies shared by the scripted policies and the
// rule-based qualitative detectors.
// ---------------------------------------------------------------------------

struct EvidenceTally {
  // (subject, task) -> counts over the visible events
  std::map<std::pair<int, std::string>, int> successes;
  std::map<std::pair<int, std::string>, int> failures;
  std::map<std::pair<int, std::string>, int> praise;
  std::map<std::pair<int, std::string>, int> criticism;

  int success_count(int agent, const std::string& task) const;
  int net_sentiment(int agent, const std::string& task) const;
  // successes + praise - criticism: the evidence the biased policies act on
  double evidence(int agent, const std::string& task) const;
};

EvidenceTally tally_events(std::span<const Event> events);

// ---------------------------------------------------------------------------
// Backend construction
// ---------------------------------------------------------------------------

// Policy seed for scripted backends: derived from the run seed and the agent
// index so scripted behaviour is reproducible per agent.
std::uint64_t policy_seed(std::uint64_t run_seed, int agent_index);

std::unique_ptr<AgentBackend> make_backend(const BackendSpec& spec, const AgentId& agent,
                                           const SimConfig& config,
                                           TransportSink* transport);

// One backend per agent, from a shared spec or a per-agent list.
std::vector<std::unique_ptr<AgentBackend>> make_backends(const SimConfig& config,
                                                         TransportSink* transport);

}  // namespace stereosim::agents

#endif  // STEREOSIM_AGENTS_HPP
