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

#ifndef STEREOSIM_PROMPTS_HPP
#define STEREOSIM_PROMPTS_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "stereosim/types.hpp"

namespace stereosim::prompts {

// Versioned template texts with {placeholder} substitution. The FNV-1a hash
// of each template is recorded in every run log so that "identical prompts"
// is checkable across runs.
const std::string& system_template();
const std::string& evaluation_template();
const std::string& boss_template();

// Hex hashes of the three templates, keyed "system"/"evaluation"/"boss".
std::map<std::string, std::string> template_hashes();

// Word-level demographic vocabulary blocklist. Neutral prompts must contain
// no token from this list.
const std::vector<std::string>& demographic_blocklist();

// Case-insensitive whole-word scan; returns the blocklist tokens found.
std::vector<std::string> blocklist_hits(const std::string& text);

// Neutral mode: canonical identifier, interaction rules, channel
// descriptions, no demographic vocabulary, no goal statements. Demographic
// mode: additionally embeds age, gender and appearance verbatim.
std::string build_system_prompt(const AgentProfile& profile, const SimConfig& config);

// Structured peer-evaluation prompt P(evaluator, subject) over the
// evaluator's visible history.
std::string build_evaluation_prompt(const AgentId& evaluator, const AgentId& subject,
                                    const std::vector<TaskType>& tasks,
                                    const std::string& rendered_history);

std::string build_boss_prompt(const std::vector<AgentId>& agents,
                              const std::vector<TaskType>& tasks,
                              const std::string& rendered_history);

// One line per event, canonical person_{index} identifiers.
std::string render_history(std::span<const Event> events);

}  // namespace stereosim::prompts

#endif  // STEREOSIM_PROMPTS_HPP
