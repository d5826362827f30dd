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

#ifndef STEREOSIM_EVALUATION_HPP
#define STEREOSIM_EVALUATION_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "stereosim/agents.hpp"
#include "stereosim/types.hpp"

namespace stereosim::eval {

// Per-assessment parse result. The pooled RoleMappings lose the per-evaluator
// dimension, so association fractions and metric inputs are computed from
// these instead.
struct ParsedAssessment {
  int evaluator = 0;
  int subject = 0;
  std::vector<std::string> endorsed;       // suitable roles, task order
  std::map<std::string, int> ratings;      // task id -> 1..10
  bool ok = false;
  std::vector<std::string> warnings;
  bool operator==(const ParsedAssessment&) const = default;
};

struct EvaluationRound {
  int phase_end_episode = 0;
  bool probe = false;  // lightweight per-episode probe vs phase-end round
  std::vector<PeerAssessment> assessments;  // all n(n-1) ordered pairs
  std::vector<ParsedAssessment> parsed;     // same order as assessments
  RoleMappings mappings;                    // pooled psi_a / psi_r / ratings
  bool valid = false;                       // false when zero assessments parsed
  bool operator==(const EvaluationRound&) const = default;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Transforms one qualitative assessment into structured form. The rule-based
// parser handles the documented mini-grammar; the LLM parser (live mode) uses
// a strict JSON contract with one re-ask on schema violation.
class ParserBackend {
 public:
  virtual ~ParserBackend() = default;
  virtual ParsedAssessment parse(const PeerAssessment& assessment,
                                 const std::vector<TaskType>& tasks) = 0;
};

std::unique_ptr<ParserBackend> make_rule_parser();
std::unique_ptr<ParserBackend> make_llm_parser(std::shared_ptr<LlmClient> client);

// Grammar entry point used by the rule parser, exposed for tests:
//   person_<j> is suited to <task>[, <r>/10]
//   person_<j> on <task>: <r>/10
// clauses separated by ';' or newlines; out-of-range ratings clamp to [1,10]
// with a warning; clauses naming unknown tasks are dropped with a warning.
ParsedAssessment parse_assessment_text(const PeerAssessment& assessment,
                                       const std::vector<TaskType>& tasks);

using VisibleFn = std::function<std::vector<Event>(int agent_index)>;

// For every ordered pair (i, j), i != j, the evaluator backend receives
// P(a_i, a_j) built over visible_history(i) and returns q_ij. Backend
// failures yield an empty assessment with the failure marker.
std::vector<PeerAssessment> collect_assessments(
    const std::vector<AgentId>& agents, const std::vector<TaskType>& tasks,
    const VisibleFn& visible,
    const std::vector<std::unique_ptr<agents::AgentBackend>>& backends,
    int round_episode);

// Parses all assessments and assembles the round. psi_r is the transpose of
// psi_a by construction; pooled ratings are the rounded mean across
// evaluators. valid == false when no assessment parsed.
EvaluationRound parse_assessments(ParserBackend& parser,
                                  std::vector<PeerAssessment> assessments,
                                  const std::vector<TaskType>& tasks, int round_episode,
                                  bool probe);

// ---------------------------------------------------------------------------
// Person-job association matrices
// ---------------------------------------------------------------------------

struct AssociationMatrix {
  std::vector<std::string> agent_names;  // row labels, agent-index order
  std::vector<int> agent_indices;
  std::vector<std::string> task_ids;  // column labels, task order
  // entry(a,t) = endorsing fraction of the valid assessments about a
  std::map<std::pair<int, std::string>, double> values;
  std::vector<std::string> provenance;

  double entry(int agent, const std::string& task) const {
    auto it = values.find({agent, task});
    return it == values.end() ? 0.0 : it->second;
  }
  double max_entry() const;
};

// Pools the given rounds (one run's rounds, or rounds from many runs when
// across_runs is set; pooling is order-invariant). Throws MetricError when no
// round is valid.
AssociationMatrix association_matrix(const std::vector<const EvaluationRound*>& rounds,
                                     const std::vector<AgentId>& agents,
                                     const std::vector<TaskType>& tasks, bool across_runs);

// CSV: header row = task ids, first column = agent names.
std::string matrix_to_csv(const AssociationMatrix& m);

}  // namespace stereosim::eval

#endif  // STEREOSIM_EVALUATION_HPP
