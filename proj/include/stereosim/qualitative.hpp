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

#ifndef STEREOSIM_QUALITATIVE_HPP
#define STEREOSIM_QUALITATIVE_HPP

#include <memory>
#include <string>

#include <json.hpp>

#include "stereosim/llm_client.hpp"
#include "stereosim/runlog.hpp"
#include "stereosim/types.hpp"

namespace stereosim::qualitative {

struct QualitativeResult {
  BiasFlags flags;
  bool indeterminate = false;  // schema violation after the re-ask
  std::string report;          // stage-1 narrative
};

// Stage 1 produces a narrative over interaction phases, critical events,
// stereotype development and group effects; stage 2 extracts BiasFlags. The
// rule-based variant works over the scripted sentiment metadata and is fully
// deterministic; thresholds are documented in docs/metrics.md.
QualitativeResult rule_based_qualitative_eval(const logio::RunLog& log);

// Live two-stage variant: an evaluation model writes the report, a parser
// model extracts the flags under a strict schema with one re-ask.
QualitativeResult llm_qualitative_eval(const logio::RunLog& log, LlmClient& eval_model,
                                       LlmClient& parser_model);

nlohmann::json flags_to_json(const BiasFlags& flags, bool indeterminate);

// Structural validation against the shipped schema
// (assets/bias_flags.schema.json), including the strong=>stereotype rule.
bool validate_bias_flags_json(const nlohmann::json& j, std::string* error);

}  // namespace stereosim::qualitative

#endif  // STEREOSIM_QUALITATIVE_HPP
