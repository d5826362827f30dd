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

#include <cstdlib>
#include <random>

#include "helpers.hpp"
#include "stereosim/agents.hpp"
#include "stereosim/prompts.hpp"
#include "stereosim/rng.hpp"

using namespace stereosim;
using namespace stereosim::agents;

TEST_CASE("neutral system prompt names the agent and avoids the blocklist") {
  auto config = testing::scripted_config(4, 10, BackendKind::ScriptedSilent, 1);
  auto profiles = make_agent_profiles(config);
  const std::string prompt = prompts::build_system_prompt(profiles[2], config);
  CHECK(prompt.find("person_3") != std::string::npos);
  CHECK(prompts::blocklist_hits(prompt).empty());
  // identical inputs produce identical text
  CHECK(prompt == prompts::build_system_prompt(profiles[2], config));
}

TEST_CASE("demographic prompt embeds profile fields verbatim") {
  auto config = testing::scripted_config(2, 10, BackendKind::ScriptedSilent, 1);
  config.profile_mode = ProfileMode::Demographic;
  config.profiles = {{"Andrew He", 28, "man", "glasses"},
                     {"Esperanza Morales", 32, "woman", "long dark hair"}};
  auto profiles = make_agent_profiles(config);
  const std::string prompt = prompts::build_system_prompt(profiles[0], config);
  CHECK(prompt.find("Andrew He") != std::string::npos);
  CHECK(prompt.find("28") != std::string::npos);
  CHECK(prompt.find("man") != std::string::npos);
  CHECK(prompt.find("glasses") != std::string::npos);
  CHECK_FALSE(prompts::blocklist_hits(prompt).empty());
}

TEST_CASE("blocklist matching is whole-word and case-insensitive") {
  CHECK(prompts::blocklist_hits("a Young man arrived").size() == 2);
  // 'manager' and 'message' must not trigger 'man'/'age'
  CHECK(prompts::blocklist_hits("the manager sent a message").empty());
}

TEST_CASE("template hashes are stable and cover all three templates") {
  auto hashes = prompts::template_hashes();
  REQUIRE(hashes.size() == 3);
  CHECK(hashes.count("system"));
  CHECK(hashes.count("evaluation"));
  CHECK(hashes.count("boss"));
  CHECK(hashes == prompts::template_hashes());
}

// ---------------------------------------------------------------------------
// fc_caller grammar
// ---------------------------------------------------------------------------

TEST_CASE("fc_parse handles the grammar cases") {
  FcContext ctx{1, 4};

  SUBCASE("bilateral directive") {
    auto r = fc_parse("SEND_TO person_2: great work", ctx);
    REQUIRE(r.ok);
    REQUIRE(r.action.messages.size() == 1);
    auto* b = std::get_if<BilateralChannel>(&r.action.messages[0].channel);
    REQUIRE(b != nullptr);
    CHECK(b->recipient == 2);
    CHECK(r.action.messages[0].body == "great work");
  }
  SUBCASE("silence preserves the thought") {
    auto r = fc_parse("I'll observe quietly.", ctx);
    REQUIRE(r.ok);
    CHECK(r.action.messages.empty());
    CHECK(r.action.thought == "I'll observe quietly.");
  }
  SUBCASE("group of size n is rejected with an issue recorded") {
    auto r = fc_parse("SEND_GROUP person_1,person_2,person_3,person_4: hi", ctx);
    CHECK(r.action.messages.empty());
    REQUIRE_FALSE(r.issues.empty());
    CHECK(r.issues[0].find("2 <= k < n") != std::string::npos);
  }
  SUBCASE("malformed participant set drops that message, keeps others") {
    auto r = fc_parse("SEND_GROUP person_2,bogus: hi\nSEND_ALL: hello", ctx);
    REQUIRE(r.action.messages.size() == 1);
    CHECK(std::holds_alternative<GlobalChannel>(r.action.messages[0].channel));
    CHECK_FALSE(r.issues.empty());
  }
  SUBCASE("self-addressed bilateral is dropped") {
    auto r = fc_parse("SEND_TO person_1: hi me", ctx);
    CHECK(r.action.messages.empty());
    CHECK_FALSE(r.issues.empty());
  }
  SUBCASE("message budget enforced") {
    auto r = fc_parse(
        "SEND_ALL: a\nSEND_ALL: b\nSEND_ALL: c\nSEND_ALL: d", ctx);
    CHECK(r.action.messages.size() == 3);
    CHECK_FALSE(r.issues.empty());
  }
  SUBCASE("sentiment tag round-trips") {
    auto r = fc_parse("SEND_TO person_2 [praise person_3 as manager]: nice", ctx);
    REQUIRE(r.action.messages.size() == 1);
    REQUIRE(r.action.messages[0].sentiment.has_value());
    CHECK(r.action.messages[0].sentiment->target == 3);
    CHECK(r.action.messages[0].sentiment->role == "manager");
  }
  SUBCASE("empty input is a parse error") {
    auto r = fc_parse("   \n  ", ctx);
    CHECK_FALSE(r.ok);
  }
}

TEST_CASE("fc_parse after fc_render is the identity on the mini-grammar") {
  std::mt19937 gen(123);
  FcContext ctx{1, 5};
  const char* bodies[] = {"hello", "nice work today", "let us sync", "x"};
  const char* roles[] = {"manager", "janitor", "data_scientist"};
  for (int iter = 0; iter < 300; ++iter) {
    AgentAction a;
    if (gen() % 2) a.thought = "thinking about round " + std::to_string(gen() % 50);
    const int n_msgs = gen() % 4;
    for (int m = 0; m < n_msgs; ++m) {
      OutMessage msg;
      switch (gen() % 3) {
        case 0:
          msg.channel = BilateralChannel{2 + (int)(gen() % 4)};  // != self
          break;
        case 1: {
          std::vector<int> parts{2 + (int)(gen() % 2), 4};
          std::sort(parts.begin(), parts.end());
          parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
          if (parts.size() < 2) parts = {2, 3};
          msg.channel = GroupChannel{parts};
          break;
        }
        default:
          msg.channel = GlobalChannel{};
      }
      msg.body = bodies[gen() % 4];
      if (gen() % 2)
        msg.sentiment = SentimentTag{gen() % 2 ? SentimentKind::Praise : SentimentKind::Criticism,
                                     1 + (int)(gen() % 5), roles[gen() % 3]};
      a.messages.push_back(msg);
    }
    auto r = fc_parse(fc_render(a), ctx);
    if (a.thought.empty() && a.messages.empty()) {
      CHECK_FALSE(r.ok);
      continue;
    }
    REQUIRE(r.ok);
    CHECK(r.issues.empty());
    CHECK(r.action == a);
  }
}

// ---------------------------------------------------------------------------
// Scripted policies
// ---------------------------------------------------------------------------

namespace {

Observation observation_for(int agent, int episode, std::vector<Event> events,
                            const SimConfig& config) {
  Observation obs;
  obs.agent = {agent, canonical_agent_name(agent)};
  obs.episode = episode;
  obs.visible_events = std::move(events);
  obs.own_assignment = config.tasks.front();
  obs.own_outcome = Outcome::Success;
  return obs;
}

}  // namespace

TEST_CASE("scripted silent backend never sends and always parses to nothing") {
  auto config = testing::scripted_config(3, 5, BackendKind::ScriptedSilent, 2);
  auto backends = make_backends(config, nullptr);
  auto obs = observation_for(1, 1, {}, config);
  auto action = backends[0]->react_cycle(obs);
  CHECK(action.messages.empty());
}

TEST_CASE("scripted backends are deterministic in their inputs") {
  auto config = testing::scripted_config(4, 5, BackendKind::ScriptedConfirmationBias, 9);
  auto b1 = make_backends(config, nullptr);
  auto b2 = make_backends(config, nullptr);
  std::vector<Event> events{
      {1, TdPayload{2, "manager", Outcome::Success}},
      {1, TdPayload{3, "janitor", Outcome::Failure}},
  };
  auto obs = observation_for(1, 2, events, config);
  CHECK(b1[0]->react_cycle(obs) == b2[0]->react_cycle(obs));
  CHECK(b1[0]->react_cycle(obs) == b1[0]->react_cycle(obs));  // stateless across calls

  PeerContext ctx;
  ctx.evaluator = {1, "person_1"};
  ctx.subject = {2, "person_2"};
  ctx.visible_events = events;
  ctx.tasks = config.tasks;
  ctx.round_episode = 3;
  CHECK(b1[0]->assess_peer(ctx) == b2[0]->assess_peer(ctx));
}

TEST_CASE("confirmation-bias policy reinforces the argmax association (replay oracle)") {
  // Independent oracle: replay the visible events, tally successes and
  // sentiment per (peer, task), apply the documented weights and jitter, and
  // predict the praised pair for the round-robin subject of the episode.
  auto config = testing::scripted_config(4, 10, BackendKind::ScriptedConfirmationBias, 31);
  auto backends = make_backends(config, nullptr);
  std::mt19937 gen(55);

  for (int iter = 0; iter < 100; ++iter) {
    const int self = 1;
    const int episode = 1 + gen() % 9;
    std::vector<Event> events;
    const int n_events = 1 + gen() % 25;
    for (int i = 0; i < n_events; ++i) {
      if (gen() % 2) {
        events.push_back({1 + (int)(gen() % 3),
                          TdPayload{1 + (int)(gen() % 4),
                                    config.tasks[gen() % 4].id,
                                    gen() % 5 < 4 ? Outcome::Success : Outcome::Failure}});
      } else {
        ImPayload im;
        im.sender = 1 + gen() % 4;
        im.channel = GlobalChannel{};
        im.body = "praise";
        im.sent_episode = 1;
        im.sentiment = SentimentTag{gen() % 4 ? SentimentKind::Praise : SentimentKind::Criticism,
                                    1 + (int)(gen() % 4), config.tasks[gen() % 4].id};
        events.push_back({2, im});
      }
    }

    // Oracle prediction.
    const std::uint64_t seed = policy_seed(config.seed, self);
    std::vector<int> peers{2, 3, 4};
    const int expected_subject = peers[(episode - 1) % peers.size()];
    double best = -1e300;
    std::string expected_role;
    for (std::size_t k = 0; k < config.tasks.size(); ++k) {
      const auto& task = config.tasks[k].id;
      double succ = 0, praise = 0, crit = 0;
      for (const auto& e : events) {
        if (e.kind() == EventKind::Td && e.td().agent == expected_subject &&
            e.td().task == task && e.td().outcome == Outcome::Success)
          succ += 1;
        if (e.kind() == EventKind::Im && e.im().sentiment &&
            e.im().sentiment->target == expected_subject && e.im().sentiment->role == task) {
          if (e.im().sentiment->kind == SentimentKind::Praise)
            praise += 1;
          else
            crit += 1;
        }
      }
      const double v = 2.0 * succ + 0.5 * (praise - crit) + stateless_unit(seed, 0xE7A, expected_subject, k);
      if (v > best) {
        best = v;
        expected_role = task;
      }
    }

    auto obs = observation_for(self, episode, events, config);
    auto action = backends[0]->react_cycle(obs);
    REQUIRE(action.messages.size() == 1);
    REQUIRE(action.messages[0].sentiment.has_value());
    CHECK(action.messages[0].sentiment->kind == SentimentKind::Praise);
    CHECK(action.messages[0].sentiment->target == expected_subject);
    CHECK(action.messages[0].sentiment->role == expected_role);
    auto* b = std::get_if<BilateralChannel>(&action.messages[0].channel);
    REQUIRE(b != nullptr);
    CHECK(b->recipient == expected_subject);
  }
}

TEST_CASE("a visible praise establishes the association the policy reinforces") {
  auto config = testing::scripted_config(4, 10, BackendKind::ScriptedConfirmationBias, 77);
  auto backends = make_backends(config, nullptr);
  // Episode 1: the round-robin subject for agent 1 is person_2. Three praises
  // for (person_2, manager) dominate any success or jitter.
  std::vector<Event> events;
  for (int i = 0; i < 3; ++i) {
    ImPayload im;
    im.sender = 3;
    im.channel = GlobalChannel{};
    im.body = "m";
    im.sent_episode = 0;
    im.sentiment = SentimentTag{SentimentKind::Praise, 2, "manager"};
    events.push_back({1, im});
  }
  auto obs = observation_for(1, 1, events, config);
  auto action = backends[0]->react_cycle(obs);
  REQUIRE(action.messages.size() == 1);
  CHECK(action.messages[0].sentiment->target == 2);
  CHECK(action.messages[0].sentiment->role == "manager");
}

TEST_CASE("llm backend construction fails fast on a missing credential variable") {
  auto config = testing::scripted_config(2, 3, BackendKind::ScriptedSilent, 1);
  BackendSpec spec;
  spec.kind = BackendKind::LlmHttp;
  spec.endpoint = "http://localhost:1/v1";
  spec.model = "test-model";
  spec.api_key_env = "STEREOSIM_SURELY_UNSET_KEY";
  unsetenv("STEREOSIM_SURELY_UNSET_KEY");
  config.backends = {spec};
  CHECK_THROWS_WITH_AS(make_backends(config, nullptr),
                       doctest::Contains("STEREOSIM_SURELY_UNSET_KEY"), ConfigError);
}

TEST_CASE("policy seeds differ per agent and reproduce from the run seed") {
  CHECK(policy_seed(5, 1) != policy_seed(5, 2));
  CHECK(policy_seed(5, 1) == policy_seed(5, 1));
  CHECK(policy_seed(5, 1) != policy_seed(6, 1));
}
