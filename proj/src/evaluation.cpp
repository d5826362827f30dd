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

#include "stereosim/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "stereosim/prompts.hpp"

namespace stereosim::eval {

namespace {

int clamp_rating(int r, std::vector<std::string>* warnings) {
  if (r < 1) {
    warnings->push_back("rating " + std::to_string(r) + " clamped to 1");
    return 1;
  }
  if (r > 10) {
    warnings->push_back("rating " + std::to_string(r) + " clamped to 10");
    return 10;
  }
  return r;
}

}  // namespace

ParsedAssessment parse_assessment_text(const PeerAssessment& assessment,
                                       const std::vector<TaskType>& tasks) {
  static const std::regex suited_re(
      R"(^\s*person_(\d+) is suited to ([A-Za-z0-9_]+)(?:\s*,\s*(-?\d+)\s*/\s*10)?\s*\.?\s*$)");
  static const std::regex rating_re(
      R"(^\s*person_(\d+) on ([A-Za-z0-9_]+)\s*:\s*(-?\d+)\s*/\s*10\s*\.?\s*$)");

  ParsedAssessment out;
  out.evaluator = assessment.evaluator;
  out.subject = assessment.subject;
  if (assessment.failed) {
    out.warnings.push_back("assessment collection failed; skipped");
    return out;
  }

  std::set<std::string> endorsed_set;
  // Clauses split on ';' and newlines.
  std::vector<std::string> clauses;
  std::string current;
  for (char c : assessment.text) {
    if (c == ';' || c == '\n') {
      clauses.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  clauses.push_back(current);

  bool any = false;
  for (const auto& clause : clauses) {
    if (clause.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::smatch m;
    if (std::regex_match(clause, m, suited_re)) {
      const std::string task_id = m[2];
      if (!find_task(tasks, task_id)) {
        out.warnings.push_back("unknown task dropped: " + task_id);
        continue;
      }
      int subject = std::stoi(m[1]);
      if (subject != assessment.subject)
        out.warnings.push_back("clause subject person_" + m[1].str() +
                               " differs from pair subject");
      out.subject = subject;
      endorsed_set.insert(task_id);
      if (m[3].matched) out.ratings[task_id] = clamp_rating(std::stoi(m[3]), &out.warnings);
      any = true;
    } else if (std::regex_match(clause, m, rating_re)) {
      const std::string task_id = m[2];
      if (!find_task(tasks, task_id)) {
        out.warnings.push_back("unknown task dropped: " + task_id);
        continue;
      }
      out.ratings[task_id] = clamp_rating(std::stoi(m[3]), &out.warnings);
      any = true;
    } else {
      out.warnings.push_back("unparseable clause: " + clause);
    }
  }

  // Endorsements in task order for a deterministic judgment rule downstream.
  for (const auto& t : tasks)
    if (endorsed_set.count(t.id)) out.endorsed.push_back(t.id);
  out.ok = any;
  return out;
}

namespace {

class RuleParser : public ParserBackend {
 public:
  ParsedAssessment parse(const PeerAssessment& a,
                         const std::vector<TaskType>& tasks) override {
    return parse_assessment_text(a, tasks);
  }
};

// Live-mode parser: strict JSON contract with one re-ask on violation.
class LlmParser : public ParserBackend {
 public:
  explicit LlmParser(std::shared_ptr<LlmClient> client) : client_(std::move(client)) {}

  ParsedAssessment parse(const PeerAssessment& a,
                         const std::vector<TaskType>& tasks) override {
    ParsedAssessment out;
    out.evaluator = a.evaluator;
    out.subject = a.subject;
    if (a.failed) {
      out.warnings.push_back("assessment collection failed; skipped");
      return out;
    }
    std::string task_list;
    for (const auto& t : tasks) task_list += (task_list.empty() ? "" : ", ") + t.id;
    const std::string instruction =
        "Extract the role assessment below into JSON with exactly this shape: "
        "{\"subject\": <agent index>, \"suitable\": [<task id>...], "
        "\"ratings\": {<task id>: <integer 1-10>, ...}}. Known tasks: " +
        task_list + ". Assessment of person_" + std::to_string(a.subject) + ":\n" + a.text;
    std::string raw;
    try {
      raw = client_->chat({{"user", instruction}});
      if (!apply_json(raw, tasks, &out)) {
        raw = client_->chat(
            {{"user", instruction},
             {"assistant", raw},
             {"user", "That was not valid JSON for the requested schema. Reply with "
                      "only the JSON object."}});
        if (!apply_json(raw, tasks, &out))
          out.warnings.push_back("parser schema violation after re-ask");
      }
    } catch (const TransportError& e) {
      out.warnings.push_back(std::string("parser transport failure: ") + e.what());
    }
    return out;
  }

 private:
  bool apply_json(const std::string& raw, const std::vector<TaskType>& tasks,
                  ParsedAssessment* out) {
    // Models sometimes wrap JSON in prose; take the outermost braces.
    auto start = raw.find('{');
    auto end = raw.rfind('}');
    if (start == std::string::npos || end == std::string::npos || end <= start) return false;
    nlohmann::json j = nlohmann::json::parse(raw.substr(start, end - start + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("suitable") ||
        !j["suitable"].is_array())
      return false;
    std::set<std::string> endorsed_set;
    for (const auto& s : j["suitable"]) {
      if (!s.is_string() || !find_task(tasks, s.get<std::string>())) continue;
      endorsed_set.insert(s.get<std::string>());
    }
    if (j.contains("ratings") && j["ratings"].is_object()) {
      for (auto it = j["ratings"].begin(); it != j["ratings"].end(); ++it) {
        if (!find_task(tasks, it.key()) || !it.value().is_number()) continue;
        out->ratings[it.key()] = clamp_rating(it.value().get<int>(), &out->warnings);
      }
    }
    out->endorsed.clear();
    for (const auto& t : tasks)
      if (endorsed_set.count(t.id)) out->endorsed.push_back(t.id);
    out->ok = !out->endorsed.empty() || !out->ratings.empty();
    return out->ok;
  }

  std::shared_ptr<LlmClient> client_;
};

}  // namespace

std::unique_ptr<ParserBackend> make_rule_parser() { return std::make_unique<RuleParser>(); }

std::unique_ptr<ParserBackend> make_llm_parser(std::shared_ptr<LlmClient> client) {
  return std::make_unique<LlmParser>(std::move(client));
}

std::vector<PeerAssessment> collect_assessments(
    const std::vector<AgentId>& agents, const std::vector<TaskType>& tasks,
    const VisibleFn& visible,
    const std::vector<std::unique_ptr<agents::AgentBackend>>& backends,
    int round_episode) {
  std::vector<PeerAssessment> out;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto view = visible(agents[i].index);
    const std::string rendered = prompts::render_history(view);
    for (std::size_t j = 0; j < agents.size(); ++j) {
      if (i == j) continue;
      agents::PeerContext ctx;
      ctx.evaluator = agents[i];
      ctx.subject = agents[j];
      ctx.visible_events = view;
      ctx.tasks = tasks;
      ctx.prompt = prompts::build_evaluation_prompt(agents[i], agents[j], tasks, rendered);
      ctx.round_episode = round_episode;
      PeerAssessment a;
      a.evaluator = agents[i].index;
      a.subject = agents[j].index;
      try {
        a.text = backends[i]->assess_peer(ctx);
      } catch (const agents::BackendError&) {
        a.failed = true;
        a.text.clear();
      }
      out.push_back(std::move(a));
    }
  }
  return out;
}

EvaluationRound parse_assessments(ParserBackend& parser,
                                  std::vector<PeerAssessment> assessments,
                                  const std::vector<TaskType>& tasks, int round_episode,
                                  bool probe) {
  EvaluationRound round;
  round.phase_end_episode = round_episode;
  round.probe = probe;
  round.assessments = std::move(assessments);

  std::map<std::pair<int, std::string>, std::pair<long, long>> rating_acc;  // sum, count
  for (const auto& a : round.assessments) {
    ParsedAssessment p = parser.parse(a, tasks);
    if (p.ok) {
      for (const auto& t : p.endorsed) {
        round.mappings.agent_to_roles[p.subject].insert(t);
        round.mappings.role_to_agents[t].insert(p.subject);
      }
      for (const auto& [task, rating] : p.ratings) {
        auto& acc = rating_acc[{p.subject, task}];
        acc.first += rating;
        acc.second += 1;
      }
    }
    round.parsed.push_back(std::move(p));
  }
  for (const auto& [key, acc] : rating_acc)
    round.mappings.ratings[key] =
        static_cast<int>(std::lround(static_cast<double>(acc.first) / acc.second));
  round.valid = std::any_of(round.parsed.begin(), round.parsed.end(),
                            [](const ParsedAssessment& p) { return p.ok; });
  return round;
}

double AssociationMatrix::max_entry() const {
  double best = 0.0;
  for (const auto& [key, v] : values) best = std::max(best, v);
  return best;
}

AssociationMatrix association_matrix(const std::vector<const EvaluationRound*>& rounds,
                                     const std::vector<AgentId>& agents,
                                     const std::vector<TaskType>& tasks, bool across_runs) {
  bool any_valid = false;
  for (const auto* r : rounds) any_valid = any_valid || (r && r->valid);
  if (!any_valid) throw MetricError("no valid evaluation rounds");

  AssociationMatrix m;
  for (const auto& a : agents) {
    m.agent_names.push_back(a.display_name);
    m.agent_indices.push_back(a.index);
  }
  for (const auto& t : tasks) m.task_ids.push_back(t.id);
  m.provenance.push_back(across_runs ? "pooled across runs" : "single run");
  m.provenance.push_back("rounds: " + std::to_string(rounds.size()));

  std::map<int, int> denom;
  std::map<std::pair<int, std::string>, int> numer;
  for (const auto* r : rounds) {
    if (!r || !r->valid) continue;
    for (const auto& p : r->parsed) {
      if (!p.ok) continue;
      denom[p.subject]++;
      for (const auto& t : p.endorsed) numer[{p.subject, t}]++;
    }
  }
  for (const auto& a : agents)
    for (const auto& t : tasks) {
      const int d = denom.count(a.index) ? denom[a.index] : 0;
      const int n = numer.count({a.index, t.id}) ? numer[{a.index, t.id}] : 0;
      m.values[{a.index, t.id}] = d == 0 ? 0.0 : static_cast<double>(n) / d;
    }
  return m;
}

std::string matrix_to_csv(const AssociationMatrix& m) {
  std::ostringstream os;
  os << "agent";
  for (const auto& t : m.task_ids) os << "," << t;
  os << "\n";
  for (std::size_t i = 0; i < m.agent_names.size(); ++i) {
    os << m.agent_names[i];
    for (const auto& t : m.task_ids) {
      auto it = m.values.find({m.agent_indices[i], t});
      os << "," << (it == m.values.end() ? 0.0 : it->second);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace stereosim::eval
