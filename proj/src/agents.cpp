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

#include "stereosim/agents.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "stereosim/prompts.hpp"
#include "stereosim/rng.hpp"

namespace stereosim::agents {

namespace {

// Hash salts keeping the stateless draw namespaces of the scripted policies
// disjoint. Documented in docs/policies.md.
enum : std::uint64_t {
  kSaltActionGate = 31,
  kSaltActionPeer = 32,
  kSaltActionTask = 33,
  kSaltActionChannel = 34,
  kSaltAssessEndorse = 41,
  kSaltAssessRating = 42,
  kSaltEta = 0xE7A,
};

}  // namespace

int EvidenceTally::success_count(int agent, const std::string& task) const {
  auto it = successes.find({agent, task});
  return it == successes.end() ? 0 : it->second;
}

int EvidenceTally::net_sentiment(int agent, const std::string& task) const {
  int p = 0, c = 0;
  if (auto it = praise.find({agent, task}); it != praise.end()) p = it->second;
  if (auto it = criticism.find({agent, task}); it != criticism.end()) c = it->second;
  return p - c;
}

double EvidenceTally::evidence(int agent, const std::string& task) const {
  return success_count(agent, task) + net_sentiment(agent, task);
}

EvidenceTally tally_events(std::span<const Event> events) {
  EvidenceTally t;
  for (const auto& e : events) {
    if (e.kind() == EventKind::Td) {
      const auto& td = e.td();
      if (td.outcome == Outcome::Success)
        t.successes[{td.agent, td.task}]++;
      else
        t.failures[{td.agent, td.task}]++;
    } else if (e.kind() == EventKind::Im) {
      const auto& im = e.im();
      if (im.sentiment) {
        if (im.sentiment->kind == SentimentKind::Praise)
          t.praise[{im.sentiment->target, im.sentiment->role}]++;
        else
          t.criticism[{im.sentiment->target, im.sentiment->role}]++;
      }
    }
  }
  return t;
}

std::uint64_t policy_seed(std::uint64_t run_seed, int agent_index) {
  return derive_stream_seed(run_seed, kPolicyStreamBase + static_cast<std::uint64_t>(agent_index));
}

// ---------------------------------------------------------------------------
// fc_caller grammar
// ---------------------------------------------------------------------------

namespace {

std::optional<SentimentTag> parse_tag(const std::string& tag, std::string* issue) {
  static const std::regex re(R"(^(praise|criticize)\s+person_(\d+)\s+as\s+([A-Za-z0-9_]+)$)");
  std::smatch m;
  if (!std::regex_match(tag, m, re)) {
    *issue = "unrecognized sentiment tag: [" + tag + "]";
    return std::nullopt;
  }
  SentimentTag t;
  t.kind = m[1] == "praise" ? SentimentKind::Praise : SentimentKind::Criticism;
  t.target = std::stoi(m[2]);
  t.role = m[3];
  return t;
}

std::string render_tag(const SentimentTag& t) {
  return std::string(" [") + (t.kind == SentimentKind::Praise ? "praise" : "criticize") +
         " person_" + std::to_string(t.target) + " as " + t.role + "]";
}

}  // namespace

FcResult fc_parse(const std::string& raw, const FcContext& ctx) {
  static const std::regex to_re(R"(^SEND_TO\s+person_(\d+)(?:\s*\[([^\]]*)\])?\s*:\s?(.*)$)");
  static const std::regex grp_re(
      R"(^SEND_GROUP\s+([A-Za-z0-9_,\s]+?)(?:\s*\[([^\]]*)\])?\s*:\s?(.*)$)");
  static const std::regex all_re(R"(^SEND_ALL(?:\s*\[([^\]]*)\])?\s*:\s?(.*)$)");
  static const std::regex person_re(R"(^person_(\d+)$)");

  FcResult out;
  std::vector<std::string> thought_lines;
  std::istringstream is(raw);
  std::string line;
  bool any_content = false;

  auto valid_agent = [&](int a) { return a >= 1 && a <= ctx.n_agents; };
  auto attach_tag = [&](OutMessage& msg, const std::string& tag_text) {
    if (tag_text.empty()) return;
    std::string issue;
    auto tag = parse_tag(tag_text, &issue);
    if (tag)
      msg.sentiment = *tag;
    else
      out.issues.push_back(issue);
  };

  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_match(line, m, to_re)) {
      any_content = true;
      int recipient = std::stoi(m[1]);
      if (recipient == ctx.self) {
        out.issues.push_back("self-addressed bilateral message dropped");
        continue;
      }
      if (!valid_agent(recipient)) {
        out.issues.push_back("unknown recipient person_" + m[1].str());
        continue;
      }
      OutMessage msg;
      msg.channel = BilateralChannel{recipient};
      msg.body = m[3];
      attach_tag(msg, m[2]);
      out.action.messages.push_back(std::move(msg));
    } else if (std::regex_match(line, m, grp_re)) {
      any_content = true;
      std::vector<int> participants;
      bool bad = false;
      std::stringstream ps(m[1].str());
      std::string part;
      while (std::getline(ps, part, ',')) {
        part.erase(0, part.find_first_not_of(" \t"));
        part.erase(part.find_last_not_of(" \t") + 1);
        std::smatch pm;
        if (!std::regex_match(part, pm, person_re)) {
          bad = true;
          break;
        }
        int idx = std::stoi(pm[1]);
        if (!valid_agent(idx)) {
          bad = true;
          break;
        }
        participants.push_back(idx);
      }
      if (bad) {
        out.issues.push_back("malformed participant set: " + m[1].str());
        continue;
      }
      std::sort(participants.begin(), participants.end());
      participants.erase(std::unique(participants.begin(), participants.end()),
                         participants.end());
      if (participants.size() < 2 ||
          participants.size() >= static_cast<std::size_t>(ctx.n_agents)) {
        out.issues.push_back("group size must satisfy 2 <= k < n, got k=" +
                             std::to_string(participants.size()));
        continue;
      }
      OutMessage msg;
      msg.channel = GroupChannel{std::move(participants)};
      msg.body = m[3];
      attach_tag(msg, m[2]);
      out.action.messages.push_back(std::move(msg));
    } else if (std::regex_match(line, m, all_re)) {
      any_content = true;
      OutMessage msg;
      msg.channel = GlobalChannel{};
      msg.body = m[2];
      attach_tag(msg, m[1]);
      out.action.messages.push_back(std::move(msg));
    } else {
      if (line.find_first_not_of(" \t") != std::string::npos) any_content = true;
      thought_lines.push_back(line);
    }
  }

  while (!thought_lines.empty() && thought_lines.back().empty()) thought_lines.pop_back();
  for (std::size_t i = 0; i < thought_lines.size(); ++i) {
    if (i) out.action.thought += "\n";
    out.action.thought += thought_lines[i];
  }
  if (out.action.messages.size() > static_cast<std::size_t>(kMessageBudget)) {
    out.issues.push_back("message budget exceeded, keeping first " +
                         std::to_string(kMessageBudget));
    out.action.messages.resize(kMessageBudget);
  }
  out.ok = any_content;
  if (!out.ok) out.issues.push_back("no recognizable content");
  return out;
}

std::string fc_render(const AgentAction& action) {
  std::ostringstream os;
  if (!action.thought.empty()) os << action.thought << "\n";
  for (const auto& msg : action.messages) {
    if (const auto* b = std::get_if<BilateralChannel>(&msg.channel)) {
      os << "SEND_TO person_" << b->recipient;
    } else if (const auto* g = std::get_if<GroupChannel>(&msg.channel)) {
      os << "SEND_GROUP ";
      for (std::size_t i = 0; i < g->participants.size(); ++i) {
        if (i) os << ",";
        os << "person_" << g->participants[i];
      }
    } else {
      os << "SEND_ALL";
    }
    if (msg.sentiment) os << render_tag(*msg.sentiment);
    os << ": " << msg.body << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Scripted policies
// ---------------------------------------------------------------------------

namespace {

// Assessment text in the parser mini-grammar: the endorsement clause first,
// then rating-only clauses in task order.
std::string assessment_text(int subject, const std::string& endorsed,
                            const std::vector<TaskType>& tasks,
                            const std::map<std::string, int>& ratings) {
  std::string who = canonical_agent_name(subject);
  std::ostringstream os;
  os << who << " is suited to " << endorsed;
  if (auto it = ratings.find(endorsed); it != ratings.end()) os << ", " << it->second << "/10";
  for (const auto& t : tasks) {
    if (t.id == endorsed) continue;
    if (auto it = ratings.find(t.id); it != ratings.end())
      os << "; " << who << " on " << t.id << ": " << it->second << "/10";
  }
  return os.str();
}

class ScriptedSilentBackend : public AgentBackend {
 public:
  AgentAction react_cycle(const Observation&) override {
    return {"observing quietly", {}};
  }
  std::string assess_peer(const PeerContext&) override { return "no assessment."; }
};

class ScriptedUniformRandomBackend : public AgentBackend {
 public:
  ScriptedUniformRandomBackend(std::uint64_t seed, int self, int n_agents,
                               std::vector<TaskType> tasks)
      : seed_(seed), self_(self), n_(n_agents), tasks_(std::move(tasks)) {}

  AgentAction react_cycle(const Observation& obs) override {
    const int ep = obs.episode;
    std::vector<int> peers;
    for (int a = 1; a <= n_; ++a)
      if (a != self_) peers.push_back(a);
    const int j = peers[stateless_index(peers.size(), seed_, ep, kSaltActionPeer)];
    const auto& t = tasks_[stateless_index(tasks_.size(), seed_, ep, kSaltActionTask)];

    OutMessage msg;
    msg.body = "good work on " + t.id + ", " + canonical_agent_name(j);
    msg.sentiment = SentimentTag{SentimentKind::Praise, j, t.id};
    const std::size_t roll = stateless_index(3, seed_, ep, kSaltActionChannel);
    if (roll == 0 || n_ < 3) {
      msg.channel = BilateralChannel{j};
    } else if (roll == 1) {
      msg.channel = GlobalChannel{};
    } else {
      int j2 = peers[(stateless_index(peers.size(), seed_, ep, kSaltActionChannel + 1))];
      if (j2 == j) j2 = peers[(std::find(peers.begin(), peers.end(), j) - peers.begin() + 1) %
                              peers.size()];
      std::vector<int> parts{j, j2};
      std::sort(parts.begin(), parts.end());
      parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
      if (parts.size() >= 2 && parts.size() < static_cast<std::size_t>(n_))
        msg.channel = GroupChannel{parts};
      else
        msg.channel = BilateralChannel{j};
    }
    return {"sharing a quick note", {msg}};
  }

  std::string assess_peer(const PeerContext& ctx) override {
    const int j = ctx.subject.index;
    const int round = ctx.round_episode;
    const auto& endorsed =
        ctx.tasks[stateless_index(ctx.tasks.size(), seed_, round, j, kSaltAssessEndorse)];
    std::map<std::string, int> ratings;
    for (std::size_t k = 0; k < ctx.tasks.size(); ++k)
      ratings[ctx.tasks[k].id] =
          1 + static_cast<int>(stateless_index(10, seed_, round, j * 64 + k, kSaltAssessRating));
    return assessment_text(j, endorsed.id, ctx.tasks, ratings);
  }

 private:
  std::uint64_t seed_;
  int self_;
  int n_;
  std::vector<TaskType> tasks_;
};

// Confirmation-bias policy. Evidence for (peer, task) visible to this agent:
//   E(j,t) = 2*successes(j,t) + 0.5*(praise(j,t) - criticism(j,t)) + eta(j,t)
// with eta a fixed per-(peer, task) jitter in [0,1) acting as the agent's
// idiosyncratic prior. With probability beta the agent praises the argmax
// association of the round-robin subject; otherwise it praises a uniformly
// drawn pair. Evaluations endorse the argmax task per subject and rate each
// task 1 + round(9 * share^2) where share is its evidence relative to the
// argmax, so ratings polarize as associations consolidate.
class ScriptedConfirmationBiasBackend : public AgentBackend {
 public:
  ScriptedConfirmationBiasBackend(std::uint64_t seed, int self, int n_agents,
                                  std::vector<TaskType> tasks, double beta)
      : seed_(seed), self_(self), n_(n_agents), tasks_(std::move(tasks)), beta_(beta) {}

  double eta(int peer, std::size_t task_index) const {
    return stateless_unit(seed_, kSaltEta, peer, task_index);
  }

  double weighted_evidence(const EvidenceTally& tally, int peer,
                           const std::string& task) const {
    return 2.0 * tally.success_count(peer, task) + 0.5 * tally.net_sentiment(peer, task);
  }

  // One bilateral praise per episode. Subjects rotate round-robin; the
  // praised role is the sender's current argmax association for that subject,
  // so established associations are reinforced for every peer over time.
  AgentAction react_cycle(const Observation& obs) override {
    const int ep = obs.episode;
    const auto tally = tally_events(obs.visible_events);
    std::vector<int> peers;
    for (int a = 1; a <= n_; ++a)
      if (a != self_) peers.push_back(a);

    OutMessage msg;
    if (stateless_unit(seed_, ep, kSaltActionGate) < beta_) {
      const int j = peers[(ep - 1) % peers.size()];
      auto [subject, t] = argmax_pair(tally, j);
      (void)subject;
      msg.body = "you are a natural " + tasks_[t].id + ", " + canonical_agent_name(j);
      msg.sentiment = SentimentTag{SentimentKind::Praise, j, tasks_[t].id};
      msg.channel = BilateralChannel{j};
      return {"reinforcing the strongest association I have seen", {msg}};
    }
    const int j = peers[stateless_index(peers.size(), seed_, ep, kSaltActionPeer)];
    const auto& t = tasks_[stateless_index(tasks_.size(), seed_, ep, kSaltActionTask)];
    msg.body = "good work on " + t.id + ", " + canonical_agent_name(j);
    msg.sentiment = SentimentTag{SentimentKind::Praise, j, t.id};
    msg.channel = BilateralChannel{j};
    return {"sharing a quick note", {msg}};
  }

  std::string assess_peer(const PeerContext& ctx) override {
    const int j = ctx.subject.index;
    const auto tally = tally_events(ctx.visible_events);
    auto [subject, t] = argmax_pair(tally, j);
    (void)subject;
    std::vector<double> evidence(tasks_.size());
    double max_evidence = 0;
    for (std::size_t k = 0; k < tasks_.size(); ++k) {
      evidence[k] = std::max(0.0, weighted_evidence(tally, j, tasks_[k].id)) + eta(j, k);
      max_evidence = std::max(max_evidence, evidence[k]);
    }
    std::map<std::string, int> ratings;
    for (std::size_t k = 0; k < tasks_.size(); ++k) {
      const double share = evidence[k] / max_evidence;
      const int r = 1 + static_cast<int>(std::lround(9.0 * share * share));
      ratings[tasks_[k].id] = std::clamp(r, 1, 10);
    }
    return assessment_text(j, tasks_[t].id, ctx.tasks, ratings);
  }

  // Argmax of evidence + eta over (peer, task); restricted to one subject when
  // given. Ties cannot occur for distinct pairs because eta is continuous.
  std::pair<int, std::size_t> argmax_pair(const EvidenceTally& tally,
                                          std::optional<int> subject) const {
    double best = -1e300;
    std::pair<int, std::size_t> arg{0, 0};
    for (int a = 1; a <= n_; ++a) {
      if (a == self_ || (subject && a != *subject)) continue;
      for (std::size_t k = 0; k < tasks_.size(); ++k) {
        const double v = weighted_evidence(tally, a, tasks_[k].id) + eta(a, k);
        if (v > best) {
          best = v;
          arg = {a, k};
        }
      }
    }
    return arg;
  }

 private:
  std::uint64_t seed_;
  int self_;
  int n_;
  std::vector<TaskType> tasks_;
  double beta_;
};

// Halo policy: one visible praise about a peer generalizes to a uniformly
// positive evaluation of that peer (all roles rated 8-10); peers without any
// praise are rated a flat 5. Praise goes to the globally best-regarded peer
// over a global channel.
class ScriptedHaloBackend : public AgentBackend {
 public:
  ScriptedHaloBackend(std::uint64_t seed, int self, int n_agents, std::vector<TaskType> tasks)
      : seed_(seed), self_(self), n_(n_agents), tasks_(std::move(tasks)) {}

  AgentAction react_cycle(const Observation& obs) override {
    const int ep = obs.episode;
    const auto tally = tally_events(obs.visible_events);
    int best_peer = 0;
    double best_score = -1e300;
    for (int a = 1; a <= n_; ++a) {
      if (a == self_) continue;
      double score = 0;
      for (const auto& t : tasks_) {
        auto p = tally.praise.find({a, t.id});
        score += 2.0 * (p == tally.praise.end() ? 0 : p->second);
        score += tally.success_count(a, t.id);
      }
      if (score > best_score) {
        best_score = score;
        best_peer = a;
      }
    }
    const std::size_t t = top_task(tally, best_peer, ep);
    OutMessage msg;
    msg.channel = GlobalChannel{};
    msg.body = canonical_agent_name(best_peer) + " is excellent, a born " + tasks_[t].id;
    msg.sentiment = SentimentTag{SentimentKind::Praise, best_peer, tasks_[t].id};
    return {"praising the most impressive colleague", {msg}};
  }

  std::string assess_peer(const PeerContext& ctx) override {
    const int j = ctx.subject.index;
    const auto tally = tally_events(ctx.visible_events);
    int praise_any = 0;
    for (const auto& t : ctx.tasks) {
      auto p = tally.praise.find({j, t.id});
      praise_any += p == tally.praise.end() ? 0 : p->second;
    }
    std::map<std::string, int> ratings;
    for (std::size_t k = 0; k < ctx.tasks.size(); ++k) {
      if (praise_any >= 1)
        ratings[ctx.tasks[k].id] =
            8 + static_cast<int>(
                    stateless_index(3, seed_, ctx.round_episode, j * 64 + k, kSaltAssessRating));
      else
        ratings[ctx.tasks[k].id] = 5;
    }
    const std::size_t t = top_task(tally, j, ctx.round_episode);
    return assessment_text(j, ctx.tasks[t].id, ctx.tasks, ratings);
  }

 private:
  std::size_t top_task(const EvidenceTally& tally, int peer, int salt) const {
    int best = -1;
    std::size_t arg = 0;
    bool any = false;
    for (std::size_t k = 0; k < tasks_.size(); ++k) {
      const int s = tally.success_count(peer, tasks_[k].id);
      if (s > best) {
        best = s;
        arg = k;
        any = any || s > 0;
      }
    }
    if (!any) return stateless_index(tasks_.size(), seed_, salt, peer, kSaltActionTask);
    return arg;
  }

  std::uint64_t seed_;
  int self_;
  int n_;
  std::vector<TaskType> tasks_;
};

// ---------------------------------------------------------------------------
// Live LLM backend (ReAct + fc_caller)
// ---------------------------------------------------------------------------

class LlmHttpBackend : public AgentBackend {
 public:
  LlmHttpBackend(const BackendSpec& spec, const AgentId& agent, const SimConfig& config,
                 TransportSink* transport)
      : agent_(agent), n_(config.n_agents), tasks_(config.tasks) {
    LlmEndpoint ep{spec.endpoint, spec.model, spec.temperature, spec.api_key_env};
    BackoffPolicy bp;
    if (!spec.fixture_dir.empty())
      client_ = make_fixture_client(ep, spec.fixture_dir, transport);
    else
      client_ = make_http_client(ep, bp, transport);
    auto profiles = make_agent_profiles(config);
    system_prompt_ = prompts::build_system_prompt(profiles.at(agent.index - 1), config);
  }

  AgentAction react_cycle(const Observation& obs) override {
    std::ostringstream user;
    user << "Episode " << obs.episode << ". Your task: " << obs.own_assignment.id
         << ". Your outcome: "
         << (obs.own_outcome == Outcome::Success ? "success" : "failure") << ".\n"
         << "Visible history:\n"
         << prompts::render_history(obs.visible_events)
         << "Reply with your reasoning and any message directives.";
    std::string raw = chat_or_backend_error(
        {{"system", system_prompt_}, {"user", user.str()}});
    FcContext ctx{agent_.index, n_};
    FcResult fc = fc_parse(raw, ctx);
    if (!fc.ok) {
      // One corrective re-ask before falling back to silence.
      std::string retry = chat_or_backend_error(
          {{"system", system_prompt_},
           {"user", user.str()},
           {"assistant", raw},
           {"user", "Your reply contained no recognizable content. Repeat your reply "
                    "using the SEND_TO / SEND_GROUP / SEND_ALL directive format, or "
                    "state your reasoning only."}});
      fc = fc_parse(retry, ctx);
      if (!fc.ok) return {"(unparseable model output)", {}};
    }
    return fc.action;
  }

  std::string assess_peer(const PeerContext& ctx) override {
    return chat_or_backend_error({{"system", system_prompt_}, {"user", ctx.prompt}});
  }

 private:
  std::string chat_or_backend_error(const std::vector<ChatMessage>& messages) {
    try {
      return client_->chat(messages);
    } catch (const TransportError& e) {
      if (e.fatal()) throw;  // configuration errors abort the run
      throw BackendError(e.what());
    }
  }

  AgentId agent_;
  int n_;
  std::vector<TaskType> tasks_;
  std::unique_ptr<LlmClient> client_;
  std::string system_prompt_;
};

}  // namespace

std::unique_ptr<AgentBackend> make_backend(const BackendSpec& spec, const AgentId& agent,
                                           const SimConfig& config,
                                           TransportSink* transport) {
  const std::uint64_t seed = policy_seed(config.seed, agent.index);
  switch (spec.kind) {
    case BackendKind::ScriptedSilent:
      return std::make_unique<ScriptedSilentBackend>();
    case BackendKind::ScriptedUniformRandom:
      return std::make_unique<ScriptedUniformRandomBackend>(seed, agent.index,
                                                            config.n_agents, config.tasks);
    case BackendKind::ScriptedConfirmationBias:
      return std::make_unique<ScriptedConfirmationBiasBackend>(
          seed, agent.index, config.n_agents, config.tasks, spec.beta);
    case BackendKind::ScriptedHalo:
      return std::make_unique<ScriptedHaloBackend>(seed, agent.index, config.n_agents,
                                                   config.tasks);
    case BackendKind::LlmHttp:
      return std::make_unique<LlmHttpBackend>(spec, agent, config, transport);
  }
  throw ConfigError("unknown backend kind");
}

std::vector<std::unique_ptr<AgentBackend>> make_backends(const SimConfig& config,
                                                         TransportSink* transport) {
  std::vector<std::unique_ptr<AgentBackend>> out;
  auto ids = make_agent_ids(config);
  for (int i = 0; i < config.n_agents; ++i) {
    const BackendSpec& spec =
        config.backends.size() == 1 ? config.backends[0] : config.backends.at(i);
    out.push_back(make_backend(spec, ids[i], config, transport));
  }
  return out;
}

}  // namespace stereosim::agents
