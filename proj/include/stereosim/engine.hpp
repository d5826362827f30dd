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

#ifndef STEREOSIM_ENGINE_HPP
#define STEREOSIM_ENGINE_HPP

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "stereosim/agents.hpp"
#include "stereosim/evaluation.hpp"
#include "stereosim/rng.hpp"
#include "stereosim/runlog.hpp"
#include "stereosim/supervisor.hpp"
#include "stereosim/types.hpp"

namespace stereosim::engine {

// Owned by a single logical execution context. The per-concern RNG streams
// are derived from the config seed, so message traffic never perturbs
// assignment or outcome draws.
struct RunState {
  SimConfig config;
  std::vector<AgentId> agents;
  Rng assign_rng;
  Rng outcome_rng;
  Rng supervisor_rng;
  std::vector<EpisodeRecord> history;    // completed episodes
  std::optional<EpisodeRecord> current;  // in-progress episode
  std::vector<ImPayload> pending_messages;  // created this episode, delivered next
  int current_episode = 0;               // number of completed episodes
  // Incrementally maintained per-agent visibility filters of the history,
  // indexed by agent index - 1. Equal to visible_history output at all times.
  std::vector<std::vector<Event>> agent_views;
};

RunState make_run_state(const SimConfig& config);

// Uniform draw per agent, consumed in AgentId order from the assignment
// stream.
Assignment assign_random(RunState& state);

// Success with probability exactly p0, independent of agent and task.
Outcome sample_outcome(RunState& state, const AgentId& agent, const TaskType& task);

// Emits Sn events for every outcome of the current episode, then delivers all
// queued messages from the previous episode in send order. Returns the events
// appended to the current record.
std::vector<Event> broadcast(RunState& state);

// One ReAct cycle per agent over a snapshot taken before any invocation
// (logical simultaneity); resulting messages are queued for next-episode
// delivery, committed in AgentId order. Returns the queued Im payloads as
// events for inspection.
std::vector<Event> interaction_phase(
    RunState& state, const std::vector<std::unique_ptr<agents::AgentBackend>>& backends);

// Chronological view for one agent: all Sn and Td events plus delivered Im
// events where the agent is sender, bilateral recipient, group participant,
// or the channel is global. Pending (undelivered) messages are excluded.
std::vector<Event> visible_history(const RunState& state, int agent_index);

// Zero-copy variant of the same view.
std::span<const Event> visible_view(const RunState& state, int agent_index);

bool event_visible_to(const Event& event, int agent_index);

struct AllocationResult {
  Assignment assignment;
  std::optional<SupervisorDecision> decision;  // hierarchical episodes only
};
using Assigner = std::function<AllocationResult(RunState&)>;

// The four-phase cycle: allocation, execution, broadcast, interaction.
EpisodeRecord run_episode(RunState& state,
                          const std::vector<std::unique_ptr<agents::AgentBackend>>& backends,
                          const Assigner& assigner);

// Backend bundle for one run. The transport sink is redirected into the run
// log when the experiment starts.
class ForwardingSink : public TransportSink {
 public:
  void record_transport(const TransportRecord& rec) override {
    if (fn) fn(rec);
  }
  std::function<void(const TransportRecord&)> fn;
};

struct RunDeps {
  std::vector<std::unique_ptr<agents::AgentBackend>> backends;
  std::unique_ptr<supervisor::BossBackend> boss;
  std::unique_ptr<eval::ParserBackend> parser;
  std::shared_ptr<ForwardingSink> sink;
};

RunDeps make_run_deps(const SimConfig& config);

// Runs episodes 1..E with per-phase peer evaluations ("after completing each
// phase"); hierarchical runs switch to the supervisor at
// hierarchical_start_episode. Streams records through the writer when given.
// Unrecoverable failures persist a partial log with an error marker and
// rethrow.
logio::RunLog run_experiment(const SimConfig& config, RunDeps& deps,
                             logio::RunLogWriter* writer = nullptr);

}  // namespace stereosim::engine

#endif  // STEREOSIM_ENGINE_HPP
