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

#include "stereosim/supervisor.hpp"

#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "stereosim/prompts.hpp"

namespace stereosim::supervisor {

Assignment uniform_assignment(Rng& rng, const std::vector<AgentId>& agents,
                              const std::vector<TaskType>& tasks) {
  Assignment a;
  for (const auto& agent : agents) a.pairs[agent.index] = tasks[rng.uniform_index(tasks.size())];
  return a;
}

std::optional<std::string> validate_assignment(const Assignment& assignment,
                                               const std::vector<AgentId>& agents,
                                               const std::vector<TaskType>& tasks) {
  for (const auto& agent : agents)
    if (!assignment.pairs.count(agent.index))
      return "agent omitted from assignment: " + canonical_agent_name(agent.index);
  for (const auto& [agent, task] : assignment.pairs) {
    bool known = false;
    for (const auto& a : agents) known = known || a.index == agent;
    if (!known) return "unknown agent in assignment: " + canonical_agent_name(agent);
    if (!find_task(tasks, task.id)) return "unknown task in assignment: " + task.id;
  }
  return std::nullopt;
}

namespace {

// Assigns each agent the task it most recently succeeded at; agents with no
// success get a uniform draw. Draws are consumed in AgentId order.
class RepeatLastSuccessBoss : public BossBackend {
 public:
  BossResult assign(const std::vector<EpisodeRecord>& history,
                    const std::vector<AgentId>& agents, const std::vector<TaskType>& tasks,
                    Rng& rng) override {
    BossResult out;
    out.rationale = "repeat the most recent success of each participant";
    for (const auto& agent : agents) {
      const TaskType* chosen = nullptr;
      for (auto rec = history.rbegin(); rec != history.rend() && !chosen; ++rec) {
        for (auto ev = rec->events.rbegin(); ev != rec->events.rend(); ++ev) {
          if (ev->kind() != EventKind::Td) continue;
          const auto& td = ev->td();
          if (td.agent == agent.index && td.outcome == Outcome::Success) {
            chosen = find_task(tasks, td.task);
            break;
          }
        }
      }
      out.assignment.pairs[agent.index] =
          chosen ? *chosen : tasks[rng.uniform_index(tasks.size())];
    }
    return out;
  }
};

// Assigns the task with the highest success rate per agent; ties break toward
// the earlier task in task order.
class SuccessRateGreedyBoss : public BossBackend {
 public:
  BossResult assign(const std::vector<EpisodeRecord>& history,
                    const std::vector<AgentId>& agents, const std::vector<TaskType>& tasks,
                    Rng& rng) override {
    std::map<std::pair<int, std::string>, std::pair<int, int>> stats;  // succ, attempts
    for (const auto& rec : history)
      for (const auto& ev : rec.events) {
        if (ev.kind() != EventKind::Td) continue;
        const auto& td = ev.td();
        auto& s = stats[{td.agent, td.task}];
        s.second += 1;
        if (td.outcome == Outcome::Success) s.first += 1;
      }
    BossResult out;
    out.rationale = "assign each participant the task with their best success rate";
    for (const auto& agent : agents) {
      const TaskType* best = nullptr;
      double best_rate = -1.0;
      for (const auto& t : tasks) {
        auto it = stats.find({agent.index, t.id});
        if (it == stats.end() || it->second.second == 0) continue;
        const double rate =
            static_cast<double>(it->second.first) / it->second.second;
        if (rate > best_rate) {
          best_rate = rate;
          best = &t;
        }
      }
      out.assignment.pairs[agent.index] =
          best ? *best : tasks[rng.uniform_index(tasks.size())];
    }
    return out;
  }
};

class UniformRandomBoss : public BossBackend {
 public:
  BossResult assign(const std::vector<EpisodeRecord>&, const std::vector<AgentId>& agents,
                    const std::vector<TaskType>& tasks, Rng& rng) override {
    return {uniform_assignment(rng, agents, tasks), "uniform random control"};
  }
};

class LlmBoss : public BossBackend {
 public:
  explicit LlmBoss(const BossSpec& spec, TransportSink* transport) {
    LlmEndpoint ep{spec.endpoint, spec.model, spec.temperature, spec.api_key_env};
    if (!spec.fixture_dir.empty())
      client_ = make_fixture_client(ep, spec.fixture_dir, transport);
    else
      client_ = make_http_client(ep, BackoffPolicy{}, transport);
  }

  BossResult assign(const std::vector<EpisodeRecord>& history,
                    const std::vector<AgentId>& agents, const std::vector<TaskType>& tasks,
                    Rng&) override {
    std::vector<Event> events;
    for (const auto& rec : history)
      events.insert(events.end(), rec.events.begin(), rec.events.end());
    const std::string prompt =
        prompts::build_boss_prompt(agents, tasks, prompts::render_history(events));
    std::string raw;
    try {
      raw = client_->chat({{"user", prompt}});
      return parse_assignment_text(raw, agents, tasks);
    } catch (const BossError& first) {
      // One corrective re-ask before giving up.
      try {
        const std::string retry = client_->chat(
            {{"user", prompt},
             {"assistant", raw},
             {"user", std::string("Invalid reply (") + first.what() +
                          "). Reply with exactly one ASSIGN line per participant."}});
        return parse_assignment_text(retry, agents, tasks);
      } catch (const TransportError& e) {
        throw BossError(std::string("boss transport failure: ") + e.what());
      }
    } catch (const TransportError& e) {
      if (e.fatal()) throw;
      throw BossError(std::string("boss transport failure: ") + e.what());
    }
  }

 private:
  std::unique_ptr<LlmClient> client_;
};

}  // namespace

BossResult parse_assignment_text(const std::string& text, const std::vector<AgentId>& agents,
                                 const std::vector<TaskType>& tasks) {
  static const std::regex assign_re(R"(^\s*ASSIGN\s+person_(\d+)\s*:\s*([A-Za-z0-9_]+)\s*$)");
  static const std::regex rationale_re(R"(^\s*RATIONALE:\s*(.*)$)");
  BossResult out;
  std::istringstream is(text);
  std::string line;
  std::set<int> seen;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_match(line, m, assign_re)) {
      const int agent = std::stoi(m[1]);
      if (!seen.insert(agent).second)
        throw BossError("duplicate agent entry: " + canonical_agent_name(agent));
      const TaskType* t = find_task(tasks, m[2]);
      if (!t) throw BossError("unknown task in assignment: " + m[2].str());
      out.assignment.pairs[agent] = *t;
    } else if (std::regex_match(line, m, rationale_re)) {
      out.rationale = m[1];
    }
  }
  if (auto err = validate_assignment(out.assignment, agents, tasks)) throw BossError(*err);
  if (out.rationale.empty()) out.rationale = "supervisor assignment";
  return out;
}

std::unique_ptr<BossBackend> make_boss(const BossSpec& spec, TransportSink* transport) {
  switch (spec.kind) {
    case BossKind::ScriptedRepeatLastSuccess:
      return std::make_unique<RepeatLastSuccessBoss>();
    case BossKind::ScriptedSuccessRateGreedy:
      return std::make_unique<SuccessRateGreedyBoss>();
    case BossKind::ScriptedUniformRandom:
      return std::make_unique<UniformRandomBoss>();
    case BossKind::LlmHttp:
      return std::make_unique<LlmBoss>(spec, transport);
  }
  throw ConfigError("unknown boss kind");
}

SupervisorDecision supervisor_assign(const std::vector<EpisodeRecord>& history,
                                     const std::vector<AgentId>& agents,
                                     const std::vector<TaskType>& tasks, BossBackend& boss,
                                     Rng& rng, int episode) {
  if (history.empty()) throw BossError("supervisor requires at least one episode of history");
  BossResult res = boss.assign(history, agents, tasks, rng);
  if (auto err = validate_assignment(res.assignment, agents, tasks)) throw BossError(*err);
  SupervisorDecision d;
  d.episode = episode;
  d.assignment = std::move(res.assignment);
  d.rationale = std::move(res.rationale);
  return d;
}

}  // namespace stereosim::supervisor
