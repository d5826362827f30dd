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

#ifndef STEREOSIM_SUPERVISOR_HPP
#define STEREOSIM_SUPERVISOR_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stereosim/llm_client.hpp"
#include "stereosim/rng.hpp"
#include "stereosim/types.hpp"

namespace stereosim::supervisor {

class BossError : public Error {
 public:
  using Error::Error;
};

struct BossResult {
  Assignment assignment;
  std::string rationale;
};

// The boss maps the complete interaction history to one task per agent. It
// never touches outcome sampling; the uniform draws of scripted bosses come
// from the dedicated supervisor stream passed in.
class BossBackend {
 public:
  virtual ~BossBackend() = default;
  virtual BossResult assign(const std::vector<EpisodeRecord>& history,
                            const std::vector<AgentId>& agents,
                            const std::vector<TaskType>& tasks, Rng& rng) = 0;
};

std::unique_ptr<BossBackend> make_boss(const BossSpec& spec, TransportSink* transport);

// nullopt when the assignment is total over the agents and every task is a
// member of the task set; otherwise a message naming the offender.
std::optional<std::string> validate_assignment(const Assignment& assignment,
                                               const std::vector<AgentId>& agents,
                                               const std::vector<TaskType>& tasks);

// Parses "ASSIGN person_k: task_id" lines (one per agent) plus an optional
// "RATIONALE: ..." line. Detects duplicate agent entries.
BossResult parse_assignment_text(const std::string& text, const std::vector<AgentId>& agents,
                                 const std::vector<TaskType>& tasks);

// Runs the boss over the history and validates the result. Throws BossError
// when the boss fails or produces an invalid assignment; the engine then
// falls back to a random assignment for the episode and marks it degraded.
SupervisorDecision supervisor_assign(const std::vector<EpisodeRecord>& history,
                                     const std::vector<AgentId>& agents,
                                     const std::vector<TaskType>& tasks, BossBackend& boss,
                                     Rng& rng, int episode);

Assignment uniform_assignment(Rng& rng, const std::vector<AgentId>& agents,
                              const std::vector<TaskType>& tasks);

}  // namespace stereosim::supervisor

#endif  // STEREOSIM_SUPERVISOR_HPP
