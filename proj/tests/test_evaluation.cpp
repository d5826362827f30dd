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

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "stereosim/engine.hpp"
#include "stereosim/evaluation.hpp"

using namespace stereosim;
using namespace stereosim::eval;

namespace {

// Captures the prompt each evaluation call receives.
class PromptRecordingBackend : public agents::AgentBackend {
 public:
  agents::AgentAction react_cycle(const agents::Observation&) override { return {"", {}}; }
  std::string assess_peer(const agents::PeerContext& ctx) override {
    prompts.push_back(ctx.prompt);
    return "no assessment.";
  }
  std::vector<std::string> prompts;
};

PeerAssessment assessment(int evaluator, int subject, const std::string& text) {
  PeerAssessment a;
  a.evaluator = evaluator;
  a.subject = subject;
  a.text = text;
  return a;
}

}  // namespace

TEST_CASE("collect_assessments covers every ordered pair exactly once") {
  auto config = testing::scripted_config(3, 2, BackendKind::ScriptedUniformRandom, 4);
  auto state = engine::make_run_state(config);
  auto backends = agents::make_backends(config, nullptr);
  auto assessments = collect_assessments(
      state.agents, config.tasks,
      [&](int agent) { return engine::visible_history(state, agent); }, backends, 2);
  REQUIRE(assessments.size() == 6);  // n(n-1)
  std::set<std::pair<int, int>> pairs;
  for (const auto& a : assessments) {
    CHECK(a.evaluator != a.subject);
    pairs.insert({a.evaluator, a.subject});
  }
  CHECK(pairs.size() == 6);
}

TEST_CASE("evaluator prompts contain only events from the evaluator's own view") {
  auto config = testing::scripted_config(3, 3, BackendKind::ScriptedSilent, 4);
  auto state = engine::make_run_state(config);

  // Episode 1: agent 2 sends a bilateral secret to agent 3.
  std::vector<std::unique_ptr<agents::AgentBackend>> backends;
  for (int i = 0; i < 3; ++i) backends.push_back(std::make_unique<PromptRecordingBackend>());
  {
    class OneShot : public agents::AgentBackend {
     public:
      agents::AgentAction react_cycle(const agents::Observation& obs) override {
        if (obs.episode != 1) return {"", {}};
        agents::OutMessage m;
        m.channel = BilateralChannel{3};
        m.body = "bilateral secret body";
        return {"", {m}};
      }
      std::string assess_peer(const agents::PeerContext&) override { return "no assessment."; }
    };
    backends[1] = std::make_unique<OneShot>();
  }
  engine::Assigner assigner = [](engine::RunState& s) -> engine::AllocationResult {
    return {engine::assign_random(s), {}};
  };
  engine::run_episode(state, backends, assigner);
  engine::run_episode(state, backends, assigner);

  auto* recorder = new PromptRecordingBackend();
  backends[0].reset(recorder);
  collect_assessments(
      state.agents, config.tasks,
      [&](int agent) { return engine::visible_history(state, agent); }, backends, 2);
  REQUIRE_FALSE(recorder->prompts.empty());
  for (const auto& prompt : recorder->prompts)
    CHECK(prompt.find("bilateral secret body") == std::string::npos);
}

TEST_CASE("the parser mini-grammar handles the documented cases") {
  auto tasks = testing::four_tasks();

  SUBCASE("endorsement with rating") {
    auto p = parse_assessment_text(assessment(1, 2, "person_2 is suited to manager, 8/10"),
                                   tasks);
    REQUIRE(p.ok);
    CHECK(p.endorsed == std::vector<std::string>{"manager"});
    CHECK(p.ratings.at("manager") == 8);
  }
  SUBCASE("out-of-range ratings clamp with a warning") {
    auto p = parse_assessment_text(assessment(1, 2, "person_2 is suited to manager, 12/10"),
                                   tasks);
    REQUIRE(p.ok);
    CHECK(p.ratings.at("manager") == 10);
    CHECK_FALSE(p.warnings.empty());
    auto q = parse_assessment_text(assessment(1, 2, "person_2 on janitor: 0/10"), tasks);
    CHECK(q.ratings.at("janitor") == 1);
  }
  SUBCASE("rating-only clauses and multiple clauses") {
    auto p = parse_assessment_text(
        assessment(1, 2,
                   "person_2 is suited to manager, 9/10; person_2 on janitor: 2/10\n"
                   "person_2 on data_scientist: 5/10"),
        tasks);
    REQUIRE(p.ok);
    CHECK(p.endorsed == std::vector<std::string>{"manager"});
    CHECK(p.ratings.size() == 3);
  }
  SUBCASE("unknown tasks are dropped with a warning") {
    auto p = parse_assessment_text(assessment(1, 2, "person_2 is suited to astronaut, 9/10"),
                                   tasks);
    CHECK_FALSE(p.ok);
    CHECK_FALSE(p.warnings.empty());
  }
  SUBCASE("free text without recognizable clauses fails to parse") {
    auto p = parse_assessment_text(assessment(1, 2, "a perfectly nice colleague"), tasks);
    CHECK_FALSE(p.ok);
  }
  SUBCASE("failed assessments are skipped") {
    auto a = assessment(1, 2, "person_2 is suited to manager");
    a.failed = true;
    CHECK_FALSE(parse_assessment_text(a, tasks).ok);
  }
}

TEST_CASE("parse_assessments builds consistent mappings with pooled ratings") {
  auto tasks = testing::four_tasks();
  auto parser = make_rule_parser();
  std::vector<PeerAssessment> assessments{
      assessment(1, 2, "person_2 is suited to manager, 8/10"),
      assessment(3, 2, "person_2 is suited to manager, 9/10"),
      assessment(2, 1, "person_1 is suited to janitor, 4/10"),
      assessment(3, 1, "free text that fails to parse"),
  };
  auto round = parse_assessments(*parser, assessments, tasks, 5, false);
  CHECK(round.valid);
  REQUIRE(round.parsed.size() == 4);
  CHECK(round.mappings.agent_to_roles.at(2).count("manager"));
  CHECK(round.mappings.role_to_agents.at("manager").count(2));
  CHECK(role_mappings_consistent(round.mappings));
  // pooled rating = rounded mean of 8 and 9
  CHECK(round.mappings.ratings.at({2, "manager"}) == 9);
  CHECK(round.mappings.ratings.at({1, "janitor"}) == 4);

  SUBCASE("zero successful parses invalidate the round") {
    std::vector<PeerAssessment> hopeless{assessment(1, 2, "nothing useful")};
    auto bad = parse_assessments(*parser, hopeless, tasks, 5, false);
    CHECK_FALSE(bad.valid);
  }
}

TEST_CASE("scripted assessments round-trip exactly through the rule parser") {
  auto config = testing::scripted_config(4, 3, BackendKind::ScriptedUniformRandom, 12);
  auto backends = agents::make_backends(config, nullptr);
  agents::PeerContext ctx;
  ctx.evaluator = {1, "person_1"};
  ctx.subject = {3, "person_3"};
  ctx.tasks = config.tasks;
  ctx.round_episode = 3;
  const std::string text = backends[0]->assess_peer(ctx);
  auto p = parse_assessment_text(assessment(1, 3, text), config.tasks);
  REQUIRE(p.ok);
  CHECK(p.subject == 3);
  CHECK(p.endorsed.size() == 1);
  CHECK(p.ratings.size() == config.tasks.size());
  CHECK(p.warnings.empty());
}

TEST_CASE("duality holds after every parse (randomized)") {
  auto tasks = testing::four_tasks();
  auto parser = make_rule_parser();
  std::mt19937 gen(31);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<PeerAssessment> assessments;
    for (int k = 0; k < 8; ++k) {
      const int subject = 1 + gen() % 4;
      const auto& task = tasks[gen() % 4].id;
      assessments.push_back(assessment(1 + gen() % 4, subject,
                                       "person_" + std::to_string(subject) +
                                           " is suited to " + task + ", " +
                                           std::to_string(1 + gen() % 10) + "/10"));
    }
    auto round = parse_assessments(*parser, assessments, tasks, 1, false);
    CHECK(role_mappings_consistent(round.mappings));
  }
}

TEST_CASE("association matrix fractions and pooling") {
  auto tasks = testing::four_tasks();
  auto parser = make_rule_parser();
  auto agents = std::vector<AgentId>{{1, "person_1"}, {2, "person_2"}, {3, "person_3"}};

  auto round1 = parse_assessments(
      *parser,
      {assessment(2, 1, "person_1 is suited to manager, 8/10"),
       assessment(3, 1, "person_1 is suited to manager, 7/10"),
       assessment(1, 2, "person_2 is suited to janitor, 5/10"),
       assessment(3, 2, "person_2 is suited to data_scientist, 6/10")},
      tasks, 1, false);

  SUBCASE("unanimity gives 1.0, an even split 0.5") {
    auto m = association_matrix({&round1}, agents, tasks, false);
    CHECK(m.entry(1, "manager") == doctest::Approx(1.0));
    CHECK(m.entry(2, "janitor") == doctest::Approx(0.5));
    CHECK(m.entry(2, "data_scientist") == doctest::Approx(0.5));
    CHECK(m.entry(1, "janitor") == doctest::Approx(0.0));
    CHECK(m.max_entry() == doctest::Approx(1.0));
  }

  SUBCASE("pooling is order-invariant") {
    auto round2 = parse_assessments(
        *parser,
        {assessment(2, 1, "person_1 is suited to janitor, 3/10"),
         assessment(3, 1, "person_1 is suited to manager, 9/10")},
        tasks, 2, false);
    auto ab = association_matrix({&round1, &round2}, agents, tasks, true);
    auto ba = association_matrix({&round2, &round1}, agents, tasks, true);
    CHECK(ab.values == ba.values);
    // 3 of 4 assessments about person_1 endorse manager
    CHECK(ab.entry(1, "manager") == doctest::Approx(0.75));
  }

  SUBCASE("no valid rounds is an error") {
    eval::EvaluationRound invalid;
    CHECK_THROWS_AS(association_matrix({&invalid}, agents, tasks, false), MetricError);
  }
}

TEST_CASE("matrix CSV has task-id headers and agent-name rows") {
  auto tasks = testing::four_tasks();
  auto parser = make_rule_parser();
  auto agents = std::vector<AgentId>{{1, "person_1"}, {2, "person_2"}};
  auto round = parse_assessments(
      *parser, {assessment(2, 1, "person_1 is suited to manager, 8/10")}, tasks, 1, false);
  auto m = association_matrix({&round}, agents, tasks, false);
  const std::string csv = matrix_to_csv(m);
  CHECK(csv.rfind("agent,data_scientist,manager,rehabilitation_counselor,janitor\n", 0) == 0);
  CHECK(csv.find("\nperson_1,") != std::string::npos);
  CHECK(csv.find("\nperson_2,") != std::string::npos);
}
