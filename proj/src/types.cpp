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

#include "stereosim/types.hpp"

#include <algorithm>
#include <set>

namespace stereosim {

std::vector<TaskType> default_tasks() {
  return {
      {"data_scientist", Warmth::Warm, Competence::Competent},
      {"manager", Warmth::Cold, Competence::Competent},
      {"rehabilitation_counselor", Warmth::Warm, Competence::Incompetent},
      {"janitor", Warmth::Cold, Competence::Incompetent},
      {"truck_driver", Warmth::Cold, Competence::Incompetent},
  };
}

const TaskType* find_task(const std::vector<TaskType>& tasks, const std::string& id) {
  for (const auto& t : tasks)
    if (t.id == id) return &t;
  return nullptr;
}

std::vector<std::string> validate_config(const SimConfig& c) {
  std::vector<std::string> errors;
  if (c.n_agents < 2) errors.push_back("n_agents >= 2 violated");
  if (c.tasks.empty()) errors.push_back("task set empty");
  {
    std::set<std::string> ids;
    for (const auto& t : c.tasks) {
      if (t.id.empty()) errors.push_back("task with empty id");
      if (!ids.insert(t.id).second) errors.push_back("duplicate task id: " + t.id);
    }
  }
  if (c.episodes < 1) errors.push_back("episodes >= 1 violated");
  if (!(c.p0 >= 0.0 && c.p0 <= 1.0)) errors.push_back("p0 in [0,1] violated");
  if (c.mode == RunMode::Hierarchical) {
    if (!c.hierarchical_start_episode) {
      errors.push_back("hierarchical mode requires hierarchical_start_episode");
    } else {
      if (*c.hierarchical_start_episode > c.episodes)
        errors.push_back("hierarchical_start_episode exceeds episode count");
      // The supervisor needs at least one random episode of history.
      if (*c.hierarchical_start_episode < 2)
        errors.push_back("hierarchical_start_episode must be >= 2");
    }
  }
  if (c.profile_mode == ProfileMode::Demographic) {
    if (static_cast<int>(c.profiles.size()) != c.n_agents) {
      errors.push_back("demographic mode requires exactly n_agents profiles");
    } else {
      for (const auto& p : c.profiles) {
        if (p.name.empty() || p.gender.empty() || p.appearance.empty() || p.age <= 0) {
          errors.push_back("incomplete demographic profile: " +
                           (p.name.empty() ? std::string("<unnamed>") : p.name));
        }
      }
    }
  }
  if (c.backends.empty()) {
    errors.push_back("no backend spec");
  } else if (c.backends.size() != 1 &&
             static_cast<int>(c.backends.size()) != c.n_agents) {
    errors.push_back("backends must be a single shared spec or one per agent");
  }
  for (const auto& b : c.backends) {
    if (b.kind == BackendKind::LlmHttp && b.fixture_dir.empty() &&
        (b.endpoint.empty() || b.model.empty()))
      errors.push_back("llm_http backend requires endpoint and model");
    if (b.beta < 0.0 || b.beta > 1.0) errors.push_back("backend beta in [0,1] violated");
  }
  if (c.mode == RunMode::Hierarchical && c.boss.kind == BossKind::LlmHttp &&
      c.boss.fixture_dir.empty() && (c.boss.endpoint.empty() || c.boss.model.empty()))
    errors.push_back("llm_http boss requires endpoint and model");
  return errors;
}

std::vector<AgentId> make_agent_ids(const SimConfig& c) {
  std::vector<AgentId> out;
  out.reserve(c.n_agents);
  for (int i = 1; i <= c.n_agents; ++i) {
    std::string name = canonical_agent_name(i);
    if (c.profile_mode == ProfileMode::Demographic &&
        i <= static_cast<int>(c.profiles.size()))
      name = c.profiles[i - 1].name;
    out.push_back({i, name});
  }
  return out;
}

std::vector<AgentProfile> make_agent_profiles(const SimConfig& c) {
  std::vector<AgentProfile> out;
  auto ids = make_agent_ids(c);
  for (int i = 1; i <= c.n_agents; ++i) {
    AgentProfile p;
    p.agent = ids[i - 1];
    p.mode = c.profile_mode;
    if (c.profile_mode == ProfileMode::Demographic) {
      const auto& d = c.profiles[i - 1];
      p.age = d.age;
      p.gender = d.gender;
      p.appearance = d.appearance;
    }
    out.push_back(std::move(p));
  }
  return out;
}

bool role_mappings_consistent(const RoleMappings& m) {
  for (const auto& [agent, roles] : m.agent_to_roles)
    for (const auto& r : roles) {
      auto it = m.role_to_agents.find(r);
      if (it == m.role_to_agents.end() || !it->second.count(agent)) return false;
    }
  for (const auto& [role, agents] : m.role_to_agents)
    for (int a : agents) {
      auto it = m.agent_to_roles.find(a);
      if (it == m.agent_to_roles.end() || !it->second.count(role)) return false;
    }
  for (const auto& [key, rating] : m.ratings)
    if (rating < 1 || rating > 10) return false;
  return true;
}

bool bias_flags_consistent(const BiasFlags& f) {
  return !f.strong_stereotype || f.stereotype;
}

}  // namespace stereosim
