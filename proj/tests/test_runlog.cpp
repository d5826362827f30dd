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

#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "stereosim/runlog.hpp"

using namespace stereosim;
using namespace stereosim::logio;

namespace {

// Random event generator for the round-trip property.
Event random_event(std::mt19937& gen) {
  const int episode = 1 + gen() % 20;
  switch (gen() % 3) {
    case 0: {
      TdPayload td;
      td.agent = 1 + gen() % 5;
      td.task = "task_" + std::to_string(gen() % 4);
      td.outcome = gen() % 2 ? Outcome::Success : Outcome::Failure;
      return {episode, td};
    }
    case 1: {
      ImPayload im;
      im.sender = 1 + gen() % 5;
      switch (gen() % 3) {
        case 0:
          im.channel = BilateralChannel{1 + (int)(gen() % 5)};
          break;
        case 1:
          im.channel = GroupChannel{{1, 2, (int)(3 + gen() % 2)}};
          break;
        default:
          im.channel = GlobalChannel{};
      }
      im.body = "body " + std::to_string(gen());
      im.sent_episode = episode - 1;
      if (gen() % 2)
        im.sentiment = SentimentTag{gen() % 2 ? SentimentKind::Praise : SentimentKind::Criticism,
                                    1 + (int)(gen() % 5), "task_" + std::to_string(gen() % 4)};
      return {episode, im};
    }
    default:
      return {episode, SnPayload{"note " + std::to_string(gen())}};
  }
}

}  // namespace

TEST_CASE("events round-trip through the log encoding") {
  std::mt19937 gen(77);
  for (int i = 0; i < 300; ++i) {
    Event e = random_event(gen);
    CHECK(event_from_json(to_json(e)) == e);
  }
}

TEST_CASE("config and profile round-trips") {
  auto c = testing::scripted_config(4, 20, BackendKind::ScriptedConfirmationBias, 99);
  c.mode = RunMode::Hierarchical;
  c.hierarchical_start_episode = 11;
  c.boss.kind = BossKind::ScriptedSuccessRateGreedy;
  c.probe_every_episode = true;
  CHECK(config_from_json(to_json(c)) == c);

  c.profile_mode = ProfileMode::Demographic;
  c.profiles = {{"Andrew He", 28, "man", "glasses"},
                {"B", 30, "woman", "hat"},
                {"C", 40, "man", "scarf"},
                {"D", 50, "woman", "coat"}};
  CHECK(config_from_json(to_json(c)) == c);
}

TEST_CASE("mappings round-trip reconstructs the transpose") {
  RoleMappings m;
  m.agent_to_roles[1] = {"a", "b"};
  m.agent_to_roles[2] = {"a"};
  m.role_to_agents["a"] = {1, 2};
  m.role_to_agents["b"] = {1};
  m.ratings[{1, "a"}] = 7;
  auto back = mappings_from_json(to_json(m));
  CHECK(back == m);
  CHECK(role_mappings_consistent(back));
}

TEST_CASE("metric report and flags round-trip") {
  MetricReport r;
  r.rsi = 0.81;
  r.gbc = 0.4;
  r.cai = 0.25;
  r.sii = 0.3;
  r.n_categories = 4;
  r.per_episode = {{1, 0.3, 0.2, 0.1, 0.2}, {2, 0.5, 0.3, 0.2, 0.25}};
  r.inputs_digest = "deadbeefdeadbeef";
  CHECK(metric_report_from_json(to_json(r)) == r);

  BiasFlags f;
  f.stereotype = true;
  f.confirmation = true;
  CHECK(flags_from_json(to_json(f)) == f);
}

TEST_CASE("a full run log round-trips through the NDJSON file") {
  auto config = testing::scripted_config(4, 6, BackendKind::ScriptedConfirmationBias, 3);
  config.mode = RunMode::Hierarchical;
  config.hierarchical_start_episode = 4;
  auto log = testing::run_scripted(config);
  REQUIRE(log.end_status == "ok");
  REQUIRE_FALSE(log.supervisor_decisions.empty());
  REQUIRE(log.evaluations.size() == 2);

  testing::TempDir dir("roundtrip");
  const std::string path = dir.file("log.ndjson");
  write_runlog(log, path);
  std::vector<std::string> warnings;
  RunLog back = read_runlog(path, &warnings);
  CHECK(warnings.empty());
  CHECK(back == log);
}

TEST_CASE("log layout: meta first, one record per event, timestamps only in meta") {
  auto config = testing::scripted_config(3, 3, BackendKind::ScriptedUniformRandom, 5);
  testing::TempDir dir("layout");
  const std::string path = dir.file("log.ndjson");
  {
    logio::RunLogWriter writer(path);
    engine::RunDeps deps = engine::make_run_deps(config);
    engine::run_experiment(config, deps, &writer);
  }
  std::ifstream in(path);
  std::string line;
  int lineno = 0, event_records = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto j = nlohmann::json::parse(line);
    if (lineno == 1) {
      CHECK(j.at("type") == "meta");
      CHECK(j.contains("started_at"));
    } else {
      CHECK_FALSE(j.contains("started_at"));
      if (j.at("type") == "event") event_records++;
    }
  }
  auto log = read_runlog(path);
  int total_events = 0;
  for (const auto& rec : log.episodes) total_events += rec.events.size();
  CHECK(event_records == total_events);
  CHECK(log.end_status == "ok");
}

TEST_CASE("a truncated log yields a parseable prefix with a warning") {
  auto config = testing::scripted_config(3, 4, BackendKind::ScriptedUniformRandom, 6);
  testing::TempDir dir("truncate");
  const std::string path = dir.file("log.ndjson");
  auto log = testing::run_scripted(config);
  write_runlog(log, path);

  // Cut the file mid-line, as a killed run would.
  std::string content = testing::slurp(path);
  std::ofstream out(path, std::ios::trunc);
  out << content.substr(0, content.size() * 2 / 3);
  out.close();

  std::vector<std::string> warnings;
  RunLog prefix = read_runlog(path, &warnings);
  CHECK(prefix.meta.seed == config.seed);
  CHECK(prefix.episodes.size() <= log.episodes.size());
  CHECK(prefix.end_status.empty());  // the end record was cut off
}

TEST_CASE("reading a missing or headerless file fails") {
  CHECK_THROWS_AS(read_runlog("/nonexistent/file.ndjson"), Error);
  testing::TempDir dir("headerless");
  const std::string path = dir.file("bad.ndjson");
  std::ofstream(path) << "{\"type\":\"event\"}\n";
  CHECK_THROWS_AS(read_runlog(path), Error);
}
