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

#ifndef STEREOSIM_RUNLOG_HPP
#define STEREOSIM_RUNLOG_HPP

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "stereosim/evaluation.hpp"
#include "stereosim/types.hpp"

namespace stereosim::logio {

// Append-only NDJSON log: one meta record first, then one record per event,
// supervisor decision, evaluation round, transport exchange or error, and a
// final end record. Timestamps live only in the meta record so determinism
// diffs can exclude exactly one line.

struct ErrorRecord {
  std::string context;
  std::string message;
  bool operator==(const ErrorRecord&) const = default;
};

struct RunLogMeta {
  int schema_version = 0;
  std::string software;
  std::uint64_t seed = 0;
  SimConfig config;
  std::vector<std::string> system_prompts;  // instantiated, agent-index order
  std::map<std::string, std::string> template_hashes;
  std::string started_at;  // ISO 8601 UTC; the only timestamp in the log
  bool operator==(const RunLogMeta&) const = default;
};

struct RunLog {
  RunLogMeta meta;
  std::vector<EpisodeRecord> episodes;
  std::vector<SupervisorDecision> supervisor_decisions;
  std::vector<eval::EvaluationRound> evaluations;
  std::vector<TransportRecord> transport;
  std::vector<ErrorRecord> errors;
  std::string end_status;  // "ok", "partial", or "" for a truncated log
  bool operator==(const RunLog&) const = default;
};

// ---------------------------------------------------------------------------
// JSON encoding of every domain type (the log schema; see docs/log_schema.md)
// ---------------------------------------------------------------------------

nlohmann::json to_json(const TaskType&);
nlohmann::json to_json(const DemographicProfile&);
nlohmann::json to_json(const BackendSpec&);
nlohmann::json to_json(const BossSpec&);
nlohmann::json to_json(const SimConfig&);
nlohmann::json to_json(const Channel&);
nlohmann::json to_json(const SentimentTag&);
nlohmann::json to_json(const Event&);
nlohmann::json to_json(const EpisodeRecord&);
nlohmann::json to_json(const Assignment&);
nlohmann::json to_json(const SupervisorDecision&);
nlohmann::json to_json(const PeerAssessment&);
nlohmann::json to_json(const eval::ParsedAssessment&);
nlohmann::json to_json(const RoleMappings&);
nlohmann::json to_json(const eval::EvaluationRound&);
nlohmann::json to_json(const TransportRecord&);
nlohmann::json to_json(const MetricPoint&);
nlohmann::json to_json(const MetricReport&);
nlohmann::json to_json(const BiasFlags&);
nlohmann::json to_json(const RunLogMeta&);

TaskType task_from_json(const nlohmann::json&);
DemographicProfile profile_from_json(const nlohmann::json&);
BackendSpec backend_from_json(const nlohmann::json&);
BossSpec boss_from_json(const nlohmann::json&);
SimConfig config_from_json(const nlohmann::json&);
Channel channel_from_json(const nlohmann::json&);
SentimentTag sentiment_from_json(const nlohmann::json&);
Event event_from_json(const nlohmann::json&);
EpisodeRecord episode_from_json(const nlohmann::json&);
Assignment assignment_from_json(const nlohmann::json&);
SupervisorDecision supervisor_from_json(const nlohmann::json&);
PeerAssessment assessment_from_json(const nlohmann::json&);
eval::ParsedAssessment parsed_from_json(const nlohmann::json&);
RoleMappings mappings_from_json(const nlohmann::json&);
eval::EvaluationRound round_from_json(const nlohmann::json&);
TransportRecord transport_from_json(const nlohmann::json&);
MetricPoint metric_point_from_json(const nlohmann::json&);
MetricReport metric_report_from_json(const nlohmann::json&);
BiasFlags flags_from_json(const nlohmann::json&);
RunLogMeta meta_from_json(const nlohmann::json&);

std::string now_iso8601_utc();

// ---------------------------------------------------------------------------
// Streaming writer / reader
// ---------------------------------------------------------------------------

class RunLogWriter {
 public:
  explicit RunLogWriter(const std::string& path);
  void write_meta(const RunLogMeta& meta);
  void write_event(const Event& event);
  void write_supervisor(const SupervisorDecision& decision);
  void write_evaluation(const eval::EvaluationRound& round);
  void write_transport(const TransportRecord& record);
  void write_error(const ErrorRecord& record);
  void write_end(const std::string& status);

 private:
  void line(const nlohmann::json& j);
  std::ofstream out_;
};

void write_runlog(const RunLog& log, const std::string& path);

// Reads a log; a truncated trailing line yields a parseable prefix plus a
// warning rather than an error. Throws Error when the file is missing or the
// first record is not a meta record.
RunLog read_runlog(const std::string& path, std::vector<std::string>* warnings = nullptr);

}  // namespace stereosim::logio

#endif  // STEREOSIM_RUNLOG_HPP
