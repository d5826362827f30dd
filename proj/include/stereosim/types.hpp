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

#ifndef STEREOSIM_TYPES_HPP
#define STEREOSIM_TYPES_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace stereosim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Agents and tasks
// ---------------------------------------------------------------------------

// Agents are identified by a 1-based index. The display name is person_{index}
// in neutral mode or the demographic profile name in ablation mode. All system
// records (events, notifications) use the canonical person_{index} form so the
// event stream is independent of profile mode; display names appear only in
// prompts and exports.
struct AgentId {
  int index = 0;
  std::string display_name;

  auto operator<=>(const AgentId& o) const { return index <=> o.index; }
  bool operator==(const AgentId& o) const = default;
};

inline std::string canonical_agent_name(int index) { return "person_" + std::to_string(index); }

enum class ProfileMode { Neutral, Demographic };

struct DemographicProfile {
  std::string name;
  int age = 0;
  std::string gender;
  std::string appearance;
  bool operator==(const DemographicProfile&) const = default;
};

struct AgentProfile {
  AgentId agent;
  ProfileMode mode = ProfileMode::Neutral;
  std::optional<int> age;
  std::optional<std::string> gender;
  std::optional<std::string> appearance;
  bool operator==(const AgentProfile&) const = default;
};

enum class Warmth { Warm, Cold };
enum class Competence { Competent, Incompetent };

struct TaskType {
  std::string id;
  Warmth warmth = Warmth::Cold;
  Competence competence = Competence::Incompetent;
  bool operator==(const TaskType&) const = default;
};

// The default task set covers all four warmth x competence quadrants.
std::vector<TaskType> default_tasks();

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

enum class BackendKind {
  ScriptedSilent,
  ScriptedUniformRandom,
  ScriptedConfirmationBias,
  ScriptedHalo,
  LlmHttp,
};

struct BackendSpec {
  BackendKind kind = BackendKind::ScriptedSilent;
  double beta = 1.0;  // bias strength for scripted bias policies, in [0,1]
  std::string endpoint;
  std::string model;
  double temperature = 0.0;
  std::string api_key_env;
  std::string fixture_dir;  // offline replay directory for LlmHttp
  bool operator==(const BackendSpec&) const = default;
};

enum class BossKind {
  ScriptedRepeatLastSuccess,
  ScriptedSuccessRateGreedy,
  ScriptedUniformRandom,
  LlmHttp,
};

struct BossSpec {
  BossKind kind = BossKind::ScriptedRepeatLastSuccess;
  std::string endpoint;
  std::string model;
  double temperature = 0.0;
  std::string api_key_env;
  std::string fixture_dir;
  bool operator==(const BossSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

enum class RunMode { RandomAssignment, Hierarchical };

struct SimConfig {
  int n_agents = 0;
  std::vector<TaskType> tasks;
  int episodes = 0;
  double p0 = 0.8;
  RunMode mode = RunMode::RandomAssignment;
  std::optional<int> hierarchical_start_episode;
  std::uint64_t seed = 0;
  ProfileMode profile_mode = ProfileMode::Neutral;
  std::vector<DemographicProfile> profiles;  // required in demographic mode
  std::vector<BackendSpec> backends;         // one shared spec or one per agent
  BossSpec boss;                             // used in hierarchical mode
  bool probe_every_episode = false;          // lightweight per-episode probes
  bool operator==(const SimConfig&) const = default;
};

// Returns an empty list when every invariant holds, otherwise one message per
// violated invariant.
std::vector<std::string> validate_config(const SimConfig& config);

// Agent identities for a validated config (indices 1..n, display names per
// profile mode).
std::vector<AgentId> make_agent_ids(const SimConfig& config);
std::vector<AgentProfile> make_agent_profiles(const SimConfig& config);

const TaskType* find_task(const std::vector<TaskType>& tasks, const std::string& id);

// ---------------------------------------------------------------------------
// Events and history
// ---------------------------------------------------------------------------

enum class Outcome { Success, Failure };

struct BilateralChannel {
  int recipient = 0;
  bool operator==(const BilateralChannel&) const = default;
};
struct GroupChannel {
  std::vector<int> participants;  // sorted, unique, 2 <= size < n
  bool operator==(const GroupChannel&) const = default;
};
struct GlobalChannel {
  bool operator==(const GlobalChannel&) const = default;
};
using Channel = std::variant<BilateralChannel, GroupChannel, GlobalChannel>;

enum class SentimentKind { Praise, Criticism };

// Structured sentiment metadata carried by scripted-policy messages so that
// scripted runs never require text understanding.
struct SentimentTag {
  SentimentKind kind = SentimentKind::Praise;
  int target = 0;
  std::string role;
  bool operator==(const SentimentTag&) const = default;
};

struct TdPayload {
  int agent = 0;
  std::string task;
  Outcome outcome = Outcome::Failure;
  bool operator==(const TdPayload&) const = default;
};

struct ImPayload {
  int sender = 0;
  Channel channel = GlobalChannel{};
  std::string body;
  int sent_episode = 0;  // creation episode; delivery is sent_episode + 1
  std::optional<SentimentTag> sentiment;
  bool operator==(const ImPayload&) const = default;
};

struct SnPayload {
  std::string text;
  bool operator==(const SnPayload&) const = default;
};

enum class EventKind { Td, Im, Sn };

struct Event {
  int episode = 0;  // the episode record this event belongs to
  std::variant<TdPayload, ImPayload, SnPayload> payload;

  EventKind kind() const {
    if (std::holds_alternative<TdPayload>(payload)) return EventKind::Td;
    if (std::holds_alternative<ImPayload>(payload)) return EventKind::Im;
    return EventKind::Sn;
  }
  const TdPayload& td() const { return std::get<TdPayload>(payload); }
  const ImPayload& im() const { return std::get<ImPayload>(payload); }
  const SnPayload& sn() const { return std::get<SnPayload>(payload); }
  bool operator==(const Event&) const = default;
};

struct EpisodeRecord {
  int index = 0;
  std::vector<Event> events;  // chronological; all carry episode == index
  bool operator==(const EpisodeRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Assignments and evaluations
// ---------------------------------------------------------------------------

struct Assignment {
  std::map<int, TaskType> pairs;  // total: one task per agent index
  bool operator==(const Assignment&) const = default;
};

struct SupervisorDecision {
  int episode = 0;
  Assignment assignment;
  std::string rationale;
  bool degraded = false;  // true when the boss failed and random fallback ran
  bool operator==(const SupervisorDecision&) const = default;
};

struct PeerAssessment {
  int evaluator = 0;
  int subject = 0;
  std::string text;
  bool failed = false;  // backend failure marker; excluded downstream
  bool operator==(const PeerAssessment&) const = default;
};

struct RoleMappings {
  std::map<int, std::set<std::string>> agent_to_roles;        // psi_a
  std::map<std::string, std::set<int>> role_to_agents;        // psi_r (transpose)
  std::map<std::pair<int, std::string>, int> ratings;         // 1..10
  bool operator==(const RoleMappings&) const = default;
};

// Checks the bidirectional consistency and rating range invariants.
bool role_mappings_consistent(const RoleMappings& m);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct MetricPoint {
  int episode = 0;
  double rsi = 0, gbc = 0, cai = 0, sii = 0;
  bool operator==(const MetricPoint&) const = default;
};

struct MetricReport {
  double rsi = 0, gbc = 0, cai = 0, sii = 0;
  int n_categories = 0;                  // the N that bounds rsi
  std::vector<MetricPoint> per_episode;  // present when the log has >1 round
  std::string inputs_digest;
  bool operator==(const MetricReport&) const = default;
};

struct BiasFlags {
  bool stereotype = false;
  bool strong_stereotype = false;
  bool halo = false;
  bool confirmation = false;
  bool role_congruity = false;
  bool self_serving = false;
  bool operator==(const BiasFlags&) const = default;
};

// strong_stereotype implies stereotype.
bool bias_flags_consistent(const BiasFlags& f);

}  // namespace stereosim

#endif  // STEREOSIM_TYPES_HPP
