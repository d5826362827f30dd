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

#include "stereosim/runlog.hpp"

#include <chrono>
#include <ctime>

#include "stereosim/version.hpp"

namespace stereosim::logio {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Encoders
// ---------------------------------------------------------------------------

json to_json(const TaskType& t) {
  return {{"id", t.id},
          {"warmth", t.warmth == Warmth::Warm ? "warm" : "cold"},
          {"competence", t.competence == Competence::Competent ? "competent" : "incompetent"}};
}

json to_json(const DemographicProfile& p) {
  return {{"name", p.name}, {"age", p.age}, {"gender", p.gender}, {"appearance", p.appearance}};
}

namespace {

std::string backend_kind_name(BackendKind k) {
  switch (k) {
    case BackendKind::ScriptedSilent: return "scripted_silent";
    case BackendKind::ScriptedUniformRandom: return "scripted_uniform_random";
    case BackendKind::ScriptedConfirmationBias: return "scripted_confirmation_bias";
    case BackendKind::ScriptedHalo: return "scripted_halo";
    case BackendKind::LlmHttp: return "llm_http";
  }
  return "scripted_silent";
}

BackendKind backend_kind_from(const std::string& s) {
  if (s == "scripted_silent") return BackendKind::ScriptedSilent;
  if (s == "scripted_uniform_random") return BackendKind::ScriptedUniformRandom;
  if (s == "scripted_confirmation_bias") return BackendKind::ScriptedConfirmationBias;
  if (s == "scripted_halo") return BackendKind::ScriptedHalo;
  if (s == "llm_http") return BackendKind::LlmHttp;
  throw Error("unknown backend kind: " + s);
}

std::string boss_kind_name(BossKind k) {
  switch (k) {
    case BossKind::ScriptedRepeatLastSuccess: return "scripted_repeat_last_success";
    case BossKind::ScriptedSuccessRateGreedy: return "scripted_success_rate_greedy";
    case BossKind::ScriptedUniformRandom: return "scripted_uniform_random";
    case BossKind::LlmHttp: return "llm_http";
  }
  return "scripted_repeat_last_success";
}

BossKind boss_kind_from(const std::string& s) {
  if (s == "scripted_repeat_last_success") return BossKind::ScriptedRepeatLastSuccess;
  if (s == "scripted_success_rate_greedy") return BossKind::ScriptedSuccessRateGreedy;
  if (s == "scripted_uniform_random") return BossKind::ScriptedUniformRandom;
  if (s == "llm_http") return BossKind::LlmHttp;
  throw Error("unknown boss kind: " + s);
}

}  // namespace

json to_json(const BackendSpec& b) {
  return {{"kind", backend_kind_name(b.kind)}, {"beta", b.beta},
          {"endpoint", b.endpoint},           {"model", b.model},
          {"temperature", b.temperature},     {"api_key_env", b.api_key_env},
          {"fixture_dir", b.fixture_dir}};
}

json to_json(const BossSpec& b) {
  return {{"kind", boss_kind_name(b.kind)},
          {"endpoint", b.endpoint},
          {"model", b.model},
          {"temperature", b.temperature},
          {"api_key_env", b.api_key_env},
          {"fixture_dir", b.fixture_dir}};
}

json to_json(const SimConfig& c) {
  json tasks = json::array();
  for (const auto& t : c.tasks) tasks.push_back(to_json(t));
  json backends = json::array();
  for (const auto& b : c.backends) backends.push_back(to_json(b));
  json profiles = json::array();
  for (const auto& p : c.profiles) profiles.push_back(to_json(p));
  json j{{"n_agents", c.n_agents},
         {"tasks", tasks},
         {"episodes", c.episodes},
         {"p0", c.p0},
         {"mode", c.mode == RunMode::Hierarchical ? "hierarchical" : "random"},
         {"seed", c.seed},
         {"profile_mode", c.profile_mode == ProfileMode::Demographic ? "demographic" : "neutral"},
         {"profiles", profiles},
         {"backends", backends},
         {"boss", to_json(c.boss)},
         {"probe_every_episode", c.probe_every_episode}};
  if (c.hierarchical_start_episode)
    j["hierarchical_start_episode"] = *c.hierarchical_start_episode;
  else
    j["hierarchical_start_episode"] = nullptr;
  return j;
}

json to_json(const Channel& c) {
  if (const auto* b = std::get_if<BilateralChannel>(&c))
    return {{"type", "bilateral"}, {"recipient", b->recipient}};
  if (const auto* g = std::get_if<GroupChannel>(&c))
    return {{"type", "group"}, {"participants", g->participants}};
  return {{"type", "global"}};
}

json to_json(const SentimentTag& s) {
  return {{"kind", s.kind == SentimentKind::Praise ? "praise" : "criticism"},
          {"target", s.target},
          {"role", s.role}};
}

json to_json(const Event& e) {
  json j{{"episode", e.episode}};
  switch (e.kind()) {
    case EventKind::Td: {
      const auto& td = e.td();
      j["kind"] = "Td";
      j["agent"] = td.agent;
      j["task"] = td.task;
      j["outcome"] = td.outcome == Outcome::Success ? "success" : "failure";
      break;
    }
    case EventKind::Im: {
      const auto& im = e.im();
      j["kind"] = "Im";
      j["sender"] = im.sender;
      j["channel"] = to_json(im.channel);
      j["body"] = im.body;
      j["sent_episode"] = im.sent_episode;
      if (im.sentiment) j["sentiment"] = to_json(*im.sentiment);
      break;
    }
    case EventKind::Sn:
      j["kind"] = "Sn";
      j["text"] = e.sn().text;
      break;
  }
  return j;
}

json to_json(const EpisodeRecord& r) {
  json events = json::array();
  for (const auto& e : r.events) events.push_back(to_json(e));
  return {{"index", r.index}, {"events", events}};
}

json to_json(const Assignment& a) {
  json pairs = json::object();
  for (const auto& [agent, task] : a.pairs) pairs[std::to_string(agent)] = to_json(task);
  return {{"pairs", pairs}};
}

json to_json(const SupervisorDecision& d) {
  return {{"episode", d.episode},
          {"assignment", to_json(d.assignment)},
          {"rationale", d.rationale},
          {"degraded", d.degraded}};
}

json to_json(const PeerAssessment& a) {
  return {{"evaluator", a.evaluator}, {"subject", a.subject}, {"text", a.text},
          {"failed", a.failed}};
}

json to_json(const eval::ParsedAssessment& p) {
  json ratings = json::object();
  for (const auto& [task, r] : p.ratings) ratings[task] = r;
  return {{"evaluator", p.evaluator}, {"subject", p.subject}, {"endorsed", p.endorsed},
          {"ratings", ratings},       {"ok", p.ok},           {"warnings", p.warnings}};
}

json to_json(const RoleMappings& m) {
  json a2r = json::object();
  for (const auto& [agent, roles] : m.agent_to_roles) {
    json arr = json::array();
    for (const auto& r : roles) arr.push_back(r);
    a2r[std::to_string(agent)] = arr;
  }
  json ratings = json::array();
  for (const auto& [key, rating] : m.ratings)
    ratings.push_back({{"agent", key.first}, {"task", key.second}, {"rating", rating}});
  // psi_r is the transpose of psi_a; reconstructed on read.
  return {{"agent_to_roles", a2r}, {"ratings", ratings}};
}

json to_json(const eval::EvaluationRound& r) {
  json assessments = json::array();
  for (const auto& a : r.assessments) assessments.push_back(to_json(a));
  json parsed = json::array();
  for (const auto& p : r.parsed) parsed.push_back(to_json(p));
  return {{"phase_end_episode", r.phase_end_episode},
          {"probe", r.probe},
          {"assessments", assessments},
          {"parsed", parsed},
          {"mappings", to_json(r.mappings)},
          {"valid", r.valid}};
}

json to_json(const TransportRecord& t) {
  return {{"request", t.request}, {"response", t.response}, {"status", t.status},
          {"attempts", t.attempts}};
}

json to_json(const MetricPoint& p) {
  return {{"episode", p.episode}, {"rsi", p.rsi}, {"gbc", p.gbc}, {"cai", p.cai},
          {"sii", p.sii}};
}

json to_json(const MetricReport& r) {
  json series = json::array();
  for (const auto& p : r.per_episode) series.push_back(to_json(p));
  return {{"rsi", r.rsi},
          {"gbc", r.gbc},
          {"cai", r.cai},
          {"sii", r.sii},
          {"n_categories", r.n_categories},
          {"per_episode", series},
          {"inputs_digest", r.inputs_digest}};
}

json to_json(const BiasFlags& f) {
  return {{"stereotype", f.stereotype},
          {"strong_stereotype", f.strong_stereotype},
          {"halo", f.halo},
          {"confirmation", f.confirmation},
          {"role_congruity", f.role_congruity},
          {"self_serving", f.self_serving}};
}

json to_json(const RunLogMeta& m) {
  return {{"schema_version", m.schema_version},
          {"software", m.software},
          {"seed", m.seed},
          {"config", to_json(m.config)},
          {"system_prompts", m.system_prompts},
          {"template_hashes", m.template_hashes},
          {"started_at", m.started_at}};
}

// ---------------------------------------------------------------------------
// Decoders
// ---------------------------------------------------------------------------

TaskType task_from_json(const json& j) {
  TaskType t;
  t.id = j.at("id").get<std::string>();
  t.warmth = j.at("warmth") == "warm" ? Warmth::Warm : Warmth::Cold;
  t.competence =
      j.at("competence") == "competent" ? Competence::Competent : Competence::Incompetent;
  return t;
}

DemographicProfile profile_from_json(const json& j) {
  return {j.at("name").get<std::string>(), j.at("age").get<int>(),
          j.at("gender").get<std::string>(), j.at("appearance").get<std::string>()};
}

BackendSpec backend_from_json(const json& j) {
  BackendSpec b;
  b.kind = backend_kind_from(j.at("kind").get<std::string>());
  b.beta = j.value("beta", 1.0);
  b.endpoint = j.value("endpoint", std::string{});
  b.model = j.value("model", std::string{});
  b.temperature = j.value("temperature", 0.0);
  b.api_key_env = j.value("api_key_env", std::string{});
  b.fixture_dir = j.value("fixture_dir", std::string{});
  return b;
}

BossSpec boss_from_json(const json& j) {
  BossSpec b;
  b.kind = boss_kind_from(j.at("kind").get<std::string>());
  b.endpoint = j.value("endpoint", std::string{});
  b.model = j.value("model", std::string{});
  b.temperature = j.value("temperature", 0.0);
  b.api_key_env = j.value("api_key_env", std::string{});
  b.fixture_dir = j.value("fixture_dir", std::string{});
  return b;
}

SimConfig config_from_json(const json& j) {
  SimConfig c;
  c.n_agents = j.at("n_agents").get<int>();
  if (j.contains("tasks"))
    for (const auto& t : j["tasks"]) c.tasks.push_back(task_from_json(t));
  c.episodes = j.at("episodes").get<int>();
  c.p0 = j.value("p0", 0.8);
  c.mode = j.value("mode", std::string("random")) == "hierarchical"
               ? RunMode::Hierarchical
               : RunMode::RandomAssignment;
  if (j.contains("hierarchical_start_episode") && !j["hierarchical_start_episode"].is_null())
    c.hierarchical_start_episode = j["hierarchical_start_episode"].get<int>();
  c.seed = j.value("seed", 0ULL);
  c.profile_mode = j.value("profile_mode", std::string("neutral")) == "demographic"
                       ? ProfileMode::Demographic
                       : ProfileMode::Neutral;
  if (j.contains("profiles"))
    for (const auto& p : j["profiles"]) c.profiles.push_back(profile_from_json(p));
  if (j.contains("backends")) {
    if (j["backends"].is_array())
      for (const auto& b : j["backends"]) c.backends.push_back(backend_from_json(b));
    else
      c.backends.push_back(backend_from_json(j["backends"]));
  }
  if (j.contains("boss")) c.boss = boss_from_json(j["boss"]);
  c.probe_every_episode = j.value("probe_every_episode", false);
  return c;
}

Channel channel_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "bilateral") return BilateralChannel{j.at("recipient").get<int>()};
  if (type == "group") return GroupChannel{j.at("participants").get<std::vector<int>>()};
  return GlobalChannel{};
}

SentimentTag sentiment_from_json(const json& j) {
  SentimentTag s;
  s.kind = j.at("kind") == "praise" ? SentimentKind::Praise : SentimentKind::Criticism;
  s.target = j.at("target").get<int>();
  s.role = j.at("role").get<std::string>();
  return s;
}

Event event_from_json(const json& j) {
  Event e;
  e.episode = j.at("episode").get<int>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "Td") {
    TdPayload td;
    td.agent = j.at("agent").get<int>();
    td.task = j.at("task").get<std::string>();
    td.outcome = j.at("outcome") == "success" ? Outcome::Success : Outcome::Failure;
    e.payload = td;
  } else if (kind == "Im") {
    ImPayload im;
    im.sender = j.at("sender").get<int>();
    im.channel = channel_from_json(j.at("channel"));
    im.body = j.at("body").get<std::string>();
    im.sent_episode = j.at("sent_episode").get<int>();
    if (j.contains("sentiment")) im.sentiment = sentiment_from_json(j["sentiment"]);
    e.payload = im;
  } else {
    e.payload = SnPayload{j.at("text").get<std::string>()};
  }
  return e;
}

EpisodeRecord episode_from_json(const json& j) {
  EpisodeRecord r;
  r.index = j.at("index").get<int>();
  for (const auto& e : j.at("events")) r.events.push_back(event_from_json(e));
  return r;
}

Assignment assignment_from_json(const json& j) {
  Assignment a;
  for (auto it = j.at("pairs").begin(); it != j.at("pairs").end(); ++it)
    a.pairs[std::stoi(it.key())] = task_from_json(it.value());
  return a;
}

SupervisorDecision supervisor_from_json(const json& j) {
  SupervisorDecision d;
  d.episode = j.at("episode").get<int>();
  d.assignment = assignment_from_json(j.at("assignment"));
  d.rationale = j.at("rationale").get<std::string>();
  d.degraded = j.value("degraded", false);
  return d;
}

PeerAssessment assessment_from_json(const json& j) {
  return {j.at("evaluator").get<int>(), j.at("subject").get<int>(),
          j.at("text").get<std::string>(), j.value("failed", false)};
}

eval::ParsedAssessment parsed_from_json(const json& j) {
  eval::ParsedAssessment p;
  p.evaluator = j.at("evaluator").get<int>();
  p.subject = j.at("subject").get<int>();
  p.endorsed = j.at("endorsed").get<std::vector<std::string>>();
  for (auto it = j.at("ratings").begin(); it != j.at("ratings").end(); ++it)
    p.ratings[it.key()] = it.value().get<int>();
  p.ok = j.at("ok").get<bool>();
  p.warnings = j.at("warnings").get<std::vector<std::string>>();
  return p;
}

RoleMappings mappings_from_json(const json& j) {
  RoleMappings m;
  for (auto it = j.at("agent_to_roles").begin(); it != j.at("agent_to_roles").end(); ++it) {
    const int agent = std::stoi(it.key());
    for (const auto& r : it.value()) {
      m.agent_to_roles[agent].insert(r.get<std::string>());
      m.role_to_agents[r.get<std::string>()].insert(agent);
    }
  }
  for (const auto& r : j.at("ratings"))
    m.ratings[{r.at("agent").get<int>(), r.at("task").get<std::string>()}] =
        r.at("rating").get<int>();
  return m;
}

eval::EvaluationRound round_from_json(const json& j) {
  eval::EvaluationRound r;
  r.phase_end_episode = j.at("phase_end_episode").get<int>();
  r.probe = j.value("probe", false);
  for (const auto& a : j.at("assessments")) r.assessments.push_back(assessment_from_json(a));
  for (const auto& p : j.at("parsed")) r.parsed.push_back(parsed_from_json(p));
  r.mappings = mappings_from_json(j.at("mappings"));
  r.valid = j.at("valid").get<bool>();
  return r;
}

TransportRecord transport_from_json(const json& j) {
  return {j.at("request").get<std::string>(), j.at("response").get<std::string>(),
          j.at("status").get<int>(), j.at("attempts").get<int>()};
}

MetricPoint metric_point_from_json(const json& j) {
  return {j.at("episode").get<int>(), j.at("rsi").get<double>(), j.at("gbc").get<double>(),
          j.at("cai").get<double>(), j.at("sii").get<double>()};
}

MetricReport metric_report_from_json(const json& j) {
  MetricReport r;
  r.rsi = j.at("rsi").get<double>();
  r.gbc = j.at("gbc").get<double>();
  r.cai = j.at("cai").get<double>();
  r.sii = j.at("sii").get<double>();
  r.n_categories = j.value("n_categories", 0);
  if (j.contains("per_episode"))
    for (const auto& p : j["per_episode"]) r.per_episode.push_back(metric_point_from_json(p));
  r.inputs_digest = j.value("inputs_digest", std::string{});
  return r;
}

BiasFlags flags_from_json(const json& j) {
  BiasFlags f;
  f.stereotype = j.at("stereotype").get<bool>();
  f.strong_stereotype = j.at("strong_stereotype").get<bool>();
  f.halo = j.at("halo").get<bool>();
  f.confirmation = j.at("confirmation").get<bool>();
  f.role_congruity = j.at("role_congruity").get<bool>();
  f.self_serving = j.at("self_serving").get<bool>();
  return f;
}

RunLogMeta meta_from_json(const json& j) {
  RunLogMeta m;
  m.schema_version = j.at("schema_version").get<int>();
  m.software = j.at("software").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config = config_from_json(j.at("config"));
  m.system_prompts = j.at("system_prompts").get<std::vector<std::string>>();
  m.template_hashes = j.at("template_hashes").get<std::map<std::string, std::string>>();
  m.started_at = j.at("started_at").get<std::string>();
  return m;
}

std::string now_iso8601_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Writer / reader
// ---------------------------------------------------------------------------

RunLogWriter::RunLogWriter(const std::string& path) : out_(path) {
  if (!out_) throw Error("cannot open log file for writing: " + path);
}

void RunLogWriter::line(const json& j) {
  out_ << j.dump() << "\n";
  out_.flush();  // incremental durability: a killed run leaves a parseable prefix
}

void RunLogWriter::write_meta(const RunLogMeta& meta) {
  json j = to_json(meta);
  j["type"] = "meta";
  line(j);
}

void RunLogWriter::write_event(const Event& event) {
  json j = to_json(event);
  j["type"] = "event";
  line(j);
}

void RunLogWriter::write_supervisor(const SupervisorDecision& decision) {
  json j = to_json(decision);
  j["type"] = "supervisor";
  line(j);
}

void RunLogWriter::write_evaluation(const eval::EvaluationRound& round) {
  json j = to_json(round);
  j["type"] = "evaluation";
  line(j);
}

void RunLogWriter::write_transport(const TransportRecord& record) {
  json j = to_json(record);
  j["type"] = "transport";
  line(j);
}

void RunLogWriter::write_error(const ErrorRecord& record) {
  line(json{{"type", "error"}, {"context", record.context}, {"message", record.message}});
}

void RunLogWriter::write_end(const std::string& status) {
  line(json{{"type", "end"}, {"status", status}});
}

void write_runlog(const RunLog& log, const std::string& path) {
  RunLogWriter w(path);
  w.write_meta(log.meta);
  for (const auto& rec : log.episodes)
    for (const auto& e : rec.events) w.write_event(e);
  for (const auto& d : log.supervisor_decisions) w.write_supervisor(d);
  for (const auto& r : log.evaluations) w.write_evaluation(r);
  for (const auto& t : log.transport) w.write_transport(t);
  for (const auto& e : log.errors) w.write_error(e);
  if (!log.end_status.empty()) w.write_end(log.end_status);
}

RunLog read_runlog(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open log file: " + path);
  RunLog log;
  bool have_meta = false;
  std::string linebuf;
  std::size_t lineno = 0;
  while (std::getline(in, linebuf)) {
    ++lineno;
    if (linebuf.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(linebuf, nullptr, false);
    if (j.is_discarded()) {
      if (warnings)
        warnings->push_back("line " + std::to_string(lineno) +
                            " unparseable (truncated write?); stopping");
      break;
    }
    const std::string type = j.value("type", "");
    if (!have_meta) {
      if (type != "meta") throw Error("log does not start with a meta record: " + path);
      log.meta = meta_from_json(j);
      have_meta = true;
      continue;
    }
    if (type == "event") {
      Event e = event_from_json(j);
      if (log.episodes.empty() || log.episodes.back().index != e.episode)
        log.episodes.push_back(EpisodeRecord{e.episode, {}});
      log.episodes.back().events.push_back(std::move(e));
    } else if (type == "supervisor") {
      log.supervisor_decisions.push_back(supervisor_from_json(j));
    } else if (type == "evaluation") {
      log.evaluations.push_back(round_from_json(j));
    } else if (type == "transport") {
      log.transport.push_back(transport_from_json(j));
    } else if (type == "error") {
      log.errors.push_back({j.value("context", ""), j.value("message", "")});
    } else if (type == "end") {
      log.end_status = j.value("status", "");
    } else if (warnings) {
      warnings->push_back("line " + std::to_string(lineno) + ": unknown record type " + type);
    }
  }
  if (!have_meta) throw Error("empty or headerless log: " + path);
  return log;
}

}  // namespace stereosim::logio
