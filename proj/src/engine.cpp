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

#include "stereosim/engine.hpp"

#include <algorithm>
#include <sstream>

#include "stereosim/prompts.hpp"
#include "stereosim/version.hpp"

namespace stereosim::engine {

RunState make_run_state(const SimConfig& config) {
  RunState s{
      config,
      make_agent_ids(config),
      Rng(derive_stream_seed(config.seed, kAssignmentStream)),
      Rng(derive_stream_seed(config.seed, kOutcomeStream)),
      Rng(derive_stream_seed(config.seed, kSupervisorStream)),
      {},
      std::nullopt,
      {},
      0,
      std::vector<std::vector<Event>>(config.n_agents),
  };
  return s;
}

namespace {

// Appends to the current record and to the views of every agent that can see
// the event, keeping agent_views equal to the visible_history contract.
void emit_event(RunState& state, Event event) {
  for (std::size_t i = 0; i < state.agent_views.size(); ++i)
    if (event_visible_to(event, static_cast<int>(i) + 1))
      state.agent_views[i].push_back(event);
  state.current->events.push_back(std::move(event));
}

}  // namespace

Assignment assign_random(RunState& state) {
  Assignment a;
  for (const auto& agent : state.agents)
    a.pairs[agent.index] = state.config.tasks[state.assign_rng.uniform_index(
        state.config.tasks.size())];
  return a;
}

Outcome sample_outcome(RunState& state, const AgentId& agent, const TaskType& task) {
  (void)agent;  // success probability is p0 for every agent-task combination
  (void)task;
  return state.outcome_rng.bernoulli(state.config.p0) ? Outcome::Success : Outcome::Failure;
}

std::vector<Event> broadcast(RunState& state) {
  if (!state.current) throw Error("broadcast called outside an episode");
  EpisodeRecord& rec = *state.current;
  const int e = rec.index;
  std::vector<Event> emitted;

  // Outcome notifications first, one per Td of this episode.
  std::vector<Event> outcome_events;
  for (const auto& ev : rec.events) {
    if (ev.kind() != EventKind::Td) continue;
    const auto& td = ev.td();
    std::ostringstream os;
    os << canonical_agent_name(td.agent) << " completed " << td.task << ": "
       << (td.outcome == Outcome::Success ? "success" : "failure");
    outcome_events.push_back(Event{e, SnPayload{os.str()}});
  }
  for (auto& ev : outcome_events) {
    rec.events.push_back(ev);
    emitted.push_back(std::move(ev));
  }

  // Queued messages from the previous episode, delivered in send order.
  for (auto& im : state.pending_messages) {
    Event ev{e, im};
    rec.events.push_back(ev);
    emitted.push_back(std::move(ev));
  }
  state.pending_messages.clear();
  return emitted;
}

bool event_visible_to(const Event& event, int agent_index) {
  if (event.kind() != EventKind::Im) return true;  // Td and Sn are public
  const auto& im = event.im();
  if (im.sender == agent_index) return true;
  if (std::holds_alternative<GlobalChannel>(im.channel)) return true;
  if (const auto* b = std::get_if<BilateralChannel>(&im.channel))
    return b->recipient == agent_index;
  const auto& g = std::get<GroupChannel>(im.channel);
  return std::find(g.participants.begin(), g.participants.end(), agent_index) !=
         g.participants.end();
}

std::vector<Event> visible_history(const RunState& state, int agent_index) {
  std::vector<Event> out;
  auto add_record = [&](const EpisodeRecord& rec) {
    for (const auto& ev : rec.events)
      if (event_visible_to(ev, agent_index)) out.push_back(ev);
  };
  for (const auto& rec : state.history) add_record(rec);
  if (state.current) add_record(*state.current);
  return out;
}

namespace {

// Channel constraints enforced when committing an action. Returns an error
// message for invalid messages.
std::optional<std::string> check_message(const agents::OutMessage& msg, int sender, int n) {
  if (const auto* b = std::get_if<BilateralChannel>(&msg.channel)) {
    if (b->recipient == sender) return "self-addressed bilateral message";
    if (b->recipient < 1 || b->recipient > n)
      return "unknown recipient " + canonical_agent_name(b->recipient);
    return std::nullopt;
  }
  if (const auto* g = std::get_if<GroupChannel>(&msg.channel)) {
    if (g->participants.size() < 2 || g->participants.size() >= static_cast<std::size_t>(n))
      return "group size must satisfy 2 <= k < n, got k=" +
             std::to_string(g->participants.size());
    for (int p : g->participants)
      if (p < 1 || p > n) return "unknown participant " + canonical_agent_name(p);
    if (!std::is_sorted(g->participants.begin(), g->participants.end()) ||
        std::adjacent_find(g->participants.begin(), g->participants.end()) !=
            g->participants.end())
      return "group participants must be sorted and unique";
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::vector<Event> interaction_phase(
    RunState& state, const std::vector<std::unique_ptr<agents::AgentBackend>>& backends) {
  if (!state.current) throw Error("interaction_phase called outside an episode");
  EpisodeRecord& rec = *state.current;
  const int e = rec.index;

  // Snapshot every observation before any backend runs: agents act logically
  // simultaneously and never see same-episode peer messages.
  std::vector<agents::Observation> observations;
  for (const auto& agent : state.agents) {
    agents::Observation obs;
    obs.agent = agent;
    obs.episode = e;
    obs.visible_events = visible_history(state, agent.index);
    for (const auto& ev : rec.events) {
      if (ev.kind() != EventKind::Td) continue;
      const auto& td = ev.td();
      if (td.agent == agent.index) {
        if (const TaskType* t = find_task(state.config.tasks, td.task)) obs.own_assignment = *t;
        obs.own_outcome = td.outcome;
      }
    }
    observations.push_back(std::move(obs));
  }

  std::vector<Event> queued;
  for (std::size_t i = 0; i < state.agents.size(); ++i) {
    const int sender = state.agents[i].index;
    agents::AgentAction action;
    try {
      action = backends[i]->react_cycle(observations[i]);
    } catch (const agents::BackendError& err) {
      rec.events.push_back(Event{
          e, SnPayload{canonical_agent_name(sender) + " backend failure: " + err.what() +
                       "; no messages this episode"}});
      continue;
    }
    if (action.messages.size() > static_cast<std::size_t>(agents::kMessageBudget)) {
      rec.events.push_back(
          Event{e, SnPayload{canonical_agent_name(sender) +
                             " exceeded the message budget; extra messages dropped"}});
      action.messages.resize(agents::kMessageBudget);
    }
    for (const auto& msg : action.messages) {
      if (auto err = check_message(msg, sender, state.config.n_agents)) {
        rec.events.push_back(Event{
            e, SnPayload{canonical_agent_name(sender) + " message rejected: " + *err}});
        continue;
      }
      ImPayload im;
      im.sender = sender;
      im.channel = msg.channel;
      im.body = msg.body;
      im.sent_episode = e;
      im.sentiment = msg.sentiment;
      state.pending_messages.push_back(im);
      queued.push_back(Event{e, std::move(im)});
    }
  }
  return queued;
}

EpisodeRecord run_episode(RunState& state,
                          const std::vector<std::unique_ptr<agents::AgentBackend>>& backends,
                          const Assigner& assigner) {
  if (state.current_episode >= state.config.episodes)
    throw Error("run_episode called after the final episode");
  const int e = state.current_episode + 1;
  state.current = EpisodeRecord{e, {}};

  // Allocation.
  AllocationResult alloc = assigner(state);
  if (alloc.decision) {
    const auto& d = *alloc.decision;
    std::string text = d.degraded
                           ? "supervisor fallback to random assignment: " + d.rationale
                           : "supervisor: " + d.rationale;
    state.current->events.push_back(Event{e, SnPayload{std::move(text)}});
  }

  // Execution: outcome draws consumed in AgentId order.
  for (const auto& agent : state.agents) {
    const TaskType& task = alloc.assignment.pairs.at(agent.index);
    const Outcome outcome = sample_outcome(state, agent, task);
    state.current->events.push_back(Event{e, TdPayload{agent.index, task.id, outcome}});
  }

  broadcast(state);
  interaction_phase(state, backends);

  EpisodeRecord rec = std::move(*state.current);
  state.current.reset();
  state.history.push_back(rec);
  state.current_episode = e;
  return rec;
}

RunDeps make_run_deps(const SimConfig& config) {
  RunDeps deps;
  deps.sink = std::make_shared<ForwardingSink>();
  deps.backends = agents::make_backends(config, deps.sink.get());
  if (config.mode == RunMode::Hierarchical)
    deps.boss = supervisor::make_boss(config.boss, deps.sink.get());
  // Rule-based parser unless the run is live; then the same endpoint parses.
  const BackendSpec* llm = nullptr;
  for (const auto& b : config.backends)
    if (b.kind == BackendKind::LlmHttp) llm = &b;
  if (llm) {
    LlmEndpoint ep{llm->endpoint, llm->model, 0.0, llm->api_key_env};
    std::shared_ptr<LlmClient> client =
        llm->fixture_dir.empty()
            ? std::shared_ptr<LlmClient>(make_http_client(ep, BackoffPolicy{}, deps.sink.get()))
            : std::shared_ptr<LlmClient>(
                  make_fixture_client(ep, llm->fixture_dir, deps.sink.get()));
    deps.parser = eval::make_llm_parser(std::move(client));
  } else {
    deps.parser = eval::make_rule_parser();
  }
  return deps;
}

logio::RunLog run_experiment(const SimConfig& config, RunDeps& deps,
                             logio::RunLogWriter* writer) {
  if (auto errors = validate_config(config); !errors.empty()) {
    std::string joined;
    for (const auto& e : errors) joined += (joined.empty() ? "" : "; ") + e;
    throw ConfigError(joined);
  }

  RunState state = make_run_state(config);
  logio::RunLog log;
  log.meta.schema_version = kLogSchemaVersion;
  log.meta.software = kSoftwareVersion;
  log.meta.seed = config.seed;
  log.meta.config = config;
  for (const auto& profile : make_agent_profiles(config))
    log.meta.system_prompts.push_back(prompts::build_system_prompt(profile, config));
  log.meta.template_hashes = prompts::template_hashes();
  log.meta.started_at = logio::now_iso8601_utc();
  if (writer) writer->write_meta(log.meta);

  if (deps.sink)
    deps.sink->fn = [&log, writer](const TransportRecord& rec) {
      log.transport.push_back(rec);
      if (writer) writer->write_transport(rec);
    };

  const int hstart = config.mode == RunMode::Hierarchical
                         ? *config.hierarchical_start_episode
                         : config.episodes + 1;

  auto record_error = [&](const std::string& context, const std::string& message) {
    log.errors.push_back({context, message});
    if (writer) writer->write_error({context, message});
  };

  try {
    for (int e = 1; e <= config.episodes; ++e) {
      Assigner assigner;
      if (e >= hstart) {
        assigner = [&, e](RunState& s) -> AllocationResult {
          SupervisorDecision d;
          try {
            d = supervisor::supervisor_assign(s.history, s.agents, s.config.tasks,
                                              *deps.boss, s.supervisor_rng, e);
          } catch (const supervisor::BossError& err) {
            record_error("supervisor episode " + std::to_string(e), err.what());
            d.episode = e;
            d.assignment =
                supervisor::uniform_assignment(s.supervisor_rng, s.agents, s.config.tasks);
            d.rationale = err.what();
            d.degraded = true;
          }
          log.supervisor_decisions.push_back(d);
          if (writer) writer->write_supervisor(d);
          return {d.assignment, d};
        };
      } else {
        assigner = [](RunState& s) -> AllocationResult { return {assign_random(s), {}}; };
      }

      EpisodeRecord rec = run_episode(state, deps.backends, assigner);
      if (writer)
        for (const auto& ev : rec.events) writer->write_event(ev);
      log.episodes.push_back(std::move(rec));

      const bool phase_end = (e == hstart - 1) || (e == config.episodes);
      if (phase_end || config.probe_every_episode) {
        auto assessments = eval::collect_assessments(
            state.agents, config.tasks,
            [&state](int agent) { return visible_history(state, agent); }, deps.backends, e);
        eval::EvaluationRound round = eval::parse_assessments(
            *deps.parser, std::move(assessments), config.tasks, e, /*probe=*/!phase_end);
        if (writer) writer->write_evaluation(round);
        log.evaluations.push_back(std::move(round));
      }
    }
  } catch (const std::exception& err) {
    record_error("run aborted", err.what());
    log.end_status = "partial";
    if (writer) writer->write_end(log.end_status);
    throw;
  }

  log.end_status = "ok";
  if (writer) writer->write_end(log.end_status);
  return log;
}

}  // namespace stereosim::engine
