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

#include "stereosim/cli.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "stereosim/engine.hpp"
#include "stereosim/metrics.hpp"
#include "stereosim/qualitative.hpp"

namespace stereosim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_jsonc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false, /*ignore_comments=*/true);
  if (j.is_discarded()) throw ConfigError("invalid JSON in " + path);
  return j;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
}

void info(const GlobalOptions& opt, const std::string& msg) {
  if (opt.verbosity >= 1) std::cerr << msg << "\n";
}

SimConfig apply_overrides(SimConfig config, const GlobalOptions& opt) {
  if (opt.seed) config.seed = *opt.seed;
  return config;
}

json summary_to_json(const metrics::AggregateSummary& agg) {
  json out{{"n_reports", agg.n_reports}};
  for (const auto& [name, s] : agg.metrics) {
    json hist = json::array();
    const double width = (s.histogram.hi - s.histogram.lo) / s.histogram.counts.size();
    for (std::size_t b = 0; b < s.histogram.counts.size(); ++b)
      hist.push_back({{"bin_start", s.histogram.lo + b * width},
                      {"bin_end", s.histogram.lo + (b + 1) * width},
                      {"count", s.histogram.counts[b]}});
    out[name] = {{"mean", s.mean},   {"sd", s.sd},          {"ci_lo", s.ci_lo},
                 {"ci_hi", s.ci_hi}, {"histogram", hist}};
  }
  return out;
}

std::string histogram_csv(const metrics::MetricSummary& s) {
  std::ostringstream os;
  os << "bin_start,bin_end,count\n";
  const double width = (s.histogram.hi - s.histogram.lo) / s.histogram.counts.size();
  for (std::size_t b = 0; b < s.histogram.counts.size(); ++b)
    os << s.histogram.lo + b * width << "," << s.histogram.lo + (b + 1) * width << ","
       << s.histogram.counts[b] << "\n";
  return os.str();
}

}  // namespace

SimConfig load_config(const std::string& path) {
  try {
    SimConfig c = logio::config_from_json(read_jsonc(path));
    if (c.tasks.empty()) c.tasks = default_tasks();
    if (c.backends.empty()) c.backends.push_back(BackendSpec{});
    return c;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }
}

std::vector<DemographicProfile> load_profiles(const std::string& path) {
  try {
    json j = read_jsonc(path);
    if (!j.is_array()) throw ConfigError("profiles file must be a JSON array: " + path);
    std::vector<DemographicProfile> out;
    for (const auto& p : j) out.push_back(logio::profile_from_json(p));
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("malformed profiles " + path + ": " + e.what());
  }
}

namespace {

// Shared by run/batch/ablation. Returns the exit code and writes the log.
int execute_run(const SimConfig& config, const std::string& log_path,
                const GlobalOptions& opt, std::string* error_out = nullptr) {
  if (auto errors = validate_config(config); !errors.empty()) {
    for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
    if (error_out) *error_out = "invalid config";
    return kExitConfig;
  }
  try {
    engine::RunDeps deps = engine::make_run_deps(config);
    logio::RunLogWriter writer(log_path);
    engine::run_experiment(config, deps, &writer);
    info(opt, "wrote " + log_path);
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    if (error_out) *error_out = e.what();
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << " (partial log at " << log_path << ")\n";
    if (error_out) *error_out = e.what();
    return kExitPartial;
  }
}

}  // namespace

int cmd_run(const std::string& config_path, const GlobalOptions& opt,
            std::string* log_path_out) {
  SimConfig config;
  try {
    config = apply_overrides(load_config(config_path), opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  fs::create_directories(opt.out_dir);
  const std::string log_path =
      (fs::path(opt.out_dir) / ("run_" + std::to_string(config.seed) + ".ndjson")).string();
  if (log_path_out) *log_path_out = log_path;
  const int code = execute_run(config, log_path, opt);
  if (code == kExitOk) std::cout << log_path << "\n";
  return code;
}

int cmd_batch(const std::string& config_path, int n_runs, int parallelism,
              const GlobalOptions& opt) {
  if (n_runs < 1) {
    std::cerr << "config error: n_runs must be >= 1\n";
    return kExitConfig;
  }
  SimConfig base;
  try {
    base = apply_overrides(load_config(config_path), opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  fs::create_directories(opt.out_dir);

  struct RunEntry {
    std::uint64_t seed = 0;
    std::string path;
    std::string status;
    std::string error;
  };
  std::vector<RunEntry> entries(n_runs);
  std::atomic<int> next{0};
  const int width = std::max(1, parallelism);

  auto worker = [&] {
    for (int i = next.fetch_add(1); i < n_runs; i = next.fetch_add(1)) {
      SimConfig config = base;
      config.seed = base.seed + static_cast<std::uint64_t>(i);  // disjoint by construction
      const std::string path =
          (fs::path(opt.out_dir) / ("run_" + std::to_string(config.seed) + ".ndjson"))
              .string();
      std::string error;
      const int code = execute_run(config, path, opt, &error);
      entries[i] = {config.seed, path, code == kExitOk ? "ok" : "failed", error};
    }
  };
  std::vector<std::thread> threads;
  for (int t = 0; t < width; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  json manifest{{"base_seed", base.seed}, {"n_runs", n_runs}};
  json runs = json::array();
  json failures = json::array();
  for (const auto& e : entries) {
    runs.push_back({{"seed", e.seed}, {"path", e.path}, {"status", e.status}});
    if (e.status != "ok")
      failures.push_back({{"seed", e.seed}, {"path", e.path}, {"error", e.error}});
  }
  manifest["runs"] = runs;
  manifest["failures"] = failures;
  const std::string manifest_path = (fs::path(opt.out_dir) / "manifest.json").string();
  write_text(manifest_path, manifest.dump(2) + "\n");
  std::cout << manifest_path << "\n";
  return kExitOk;  // individual failures are recorded, the batch itself succeeded
}

int cmd_metrics(const std::vector<std::string>& log_paths, const GlobalOptions& opt) {
  fs::create_directories(opt.out_dir);
  std::vector<MetricReport> reports;
  std::ostringstream csv;
  csv << "log,rsi,gbc,cai,sii,n_categories,inputs_digest\n";
  int readable = 0;
  for (const auto& path : log_paths) {
    logio::RunLog log;
    try {
      log = logio::read_runlog(path);
      readable++;
    } catch (const std::exception& e) {
      std::cerr << "skipping corrupt log " << path << ": " << e.what() << "\n";
      continue;
    }
    try {
      MetricReport rep = metrics::compute_report(log);
      json j = logio::to_json(rep);
      write_text((fs::path(opt.out_dir) / (stem_of(path) + ".metrics.json")).string(),
                 j.dump(2) + "\n");
      csv << path << "," << rep.rsi << "," << rep.gbc << "," << rep.cai << "," << rep.sii
          << "," << rep.n_categories << "," << rep.inputs_digest << "\n";
      reports.push_back(std::move(rep));
    } catch (const MetricError& e) {
      std::cerr << "skipping log without usable evaluations " << path << ": " << e.what()
                << "\n";
    }
  }
  if (readable == 0) {
    std::cerr << "no readable logs\n";
    return kExitConfig;
  }
  write_text((fs::path(opt.out_dir) / "metrics.csv").string(), csv.str());
  if (reports.size() >= 2) {
    const auto agg = metrics::meta_aggregate(reports);
    write_text((fs::path(opt.out_dir) / "aggregate.json").string(),
               summary_to_json(agg).dump(2) + "\n");
    for (const auto& [name, summary] : agg.metrics)
      write_text((fs::path(opt.out_dir) / ("hist_" + name + ".csv")).string(),
                 histogram_csv(summary));
  }
  info(opt, "metrics written to " + opt.out_dir);
  return kExitOk;
}

int cmd_heatmap(const std::vector<std::string>& log_paths, const std::string& mode,
                const GlobalOptions& opt) {
  if (mode != "single" && mode != "pooled") {
    std::cerr << "config error: --mode must be single or pooled\n";
    return kExitConfig;
  }
  fs::create_directories(opt.out_dir);
  std::vector<logio::RunLog> logs;
  std::vector<std::string> paths;
  for (const auto& path : log_paths) {
    try {
      logs.push_back(logio::read_runlog(path));
      paths.push_back(path);
    } catch (const std::exception& e) {
      std::cerr << "skipping corrupt log " << path << ": " << e.what() << "\n";
    }
  }
  int produced = 0;
  if (mode == "single") {
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const auto& log = logs[i];
      std::vector<const eval::EvaluationRound*> rounds;
      for (const auto& r : log.evaluations) rounds.push_back(&r);
      try {
        auto m = eval::association_matrix(rounds, make_agent_ids(log.meta.config),
                                          log.meta.config.tasks, false);
        write_text((fs::path(opt.out_dir) / (stem_of(paths[i]) + ".matrix.csv")).string(),
                   eval::matrix_to_csv(m));
        produced++;
      } catch (const MetricError& e) {
        std::cerr << "no evaluations in " << paths[i] << ": " << e.what() << "\n";
      }
    }
  } else {
    std::vector<const eval::EvaluationRound*> rounds;
    for (const auto& log : logs)
      for (const auto& r : log.evaluations) rounds.push_back(&r);
    if (!logs.empty()) {
      try {
        auto m = eval::association_matrix(rounds, make_agent_ids(logs.front().meta.config),
                                          logs.front().meta.config.tasks, true);
        write_text((fs::path(opt.out_dir) / "pooled_matrix.csv").string(),
                   eval::matrix_to_csv(m));
        produced++;
      } catch (const MetricError& e) {
        std::cerr << "no evaluations: " << e.what() << "\n";
      }
    }
  }
  if (produced == 0) {
    std::cerr << "no matrices produced\n";
    return kExitConfig;
  }
  info(opt, "matrices written to " + opt.out_dir);
  return kExitOk;
}

int cmd_ablation(const std::string& config_path, const std::string& profiles_path,
                 const GlobalOptions& opt) {
  SimConfig base;
  std::vector<DemographicProfile> profiles;
  try {
    base = apply_overrides(load_config(config_path), opt);
    profiles = load_profiles(profiles_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (static_cast<int>(profiles.size()) != base.n_agents) {
    std::cerr << "config error: profiles file has " << profiles.size() << " entries, config has "
              << base.n_agents << " agents\n";
    return kExitConfig;
  }
  fs::create_directories(opt.out_dir);

  SimConfig neutral = base;
  neutral.profile_mode = ProfileMode::Neutral;
  neutral.profiles.clear();
  SimConfig demographic = base;
  demographic.profile_mode = ProfileMode::Demographic;
  demographic.profiles = profiles;

  const std::string neutral_path = (fs::path(opt.out_dir) / "neutral.ndjson").string();
  const std::string demographic_path =
      (fs::path(opt.out_dir) / "demographic.ndjson").string();
  int code = execute_run(neutral, neutral_path, opt);
  if (code != kExitOk) return code;
  code = execute_run(demographic, demographic_path, opt);
  if (code != kExitOk) return code;

  json manifest{{"seed", base.seed},
                {"neutral", neutral_path},
                {"demographic", demographic_path}};
  const std::string manifest_path =
      (fs::path(opt.out_dir) / "ablation_manifest.json").string();
  write_text(manifest_path, manifest.dump(2) + "\n");
  std::cout << manifest_path << "\n";
  return kExitOk;
}

int cmd_llm_eval(const std::string& log_path, const std::string& backend_config_path,
                 const GlobalOptions& opt) {
  logio::RunLog log;
  try {
    log = logio::read_runlog(log_path);
  } catch (const std::exception& e) {
    std::cerr << "cannot read log: " << e.what() << "\n";
    return kExitConfig;
  }
  fs::create_directories(opt.out_dir);

  qualitative::QualitativeResult result;
  if (backend_config_path.empty()) {
    result = qualitative::rule_based_qualitative_eval(log);
  } else {
    try {
      json j = read_jsonc(backend_config_path);
      LlmEndpoint ep{j.at("endpoint").get<std::string>(), j.at("model").get<std::string>(),
                     j.value("temperature", 0.0), j.value("api_key_env", std::string{})};
      auto eval_model = make_http_client(ep, BackoffPolicy{}, nullptr);
      auto parser_model = make_http_client(ep, BackoffPolicy{}, nullptr);
      result = qualitative::llm_qualitative_eval(log, *eval_model, *parser_model);
    } catch (const std::exception& e) {
      std::cerr << "llm evaluation failed: " << e.what() << "\n";
      return kExitPartial;
    }
  }

  write_text((fs::path(opt.out_dir) / "flags.json").string(),
             qualitative::flags_to_json(result.flags, result.indeterminate).dump(2) + "\n");
  write_text((fs::path(opt.out_dir) / "report.txt").string(), result.report);
  info(opt, "flags and report written to " + opt.out_dir);
  return kExitOk;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"stereosim: multi-agent workplace stereotype simulation and metrics"};
  app.require_subcommand(1);

  GlobalOptions opt;
  std::uint64_t seed_value = 0;
  bool seed_set = false;
  app.add_option_function<std::uint64_t>(
         "--seed", [&](std::uint64_t v) { seed_value = v; seed_set = true; },
         "override the config seed")
      ->expected(1);
  app.add_option("--out-dir", opt.out_dir, "output directory");
  app.add_option("--verbosity", opt.verbosity, "0 quiet, 1 normal, 2 debug");

  std::string config_path, profiles_path, mode = "single", backend_config, log_path;
  std::vector<std::string> log_paths;
  int n_runs = 1, parallelism = 1;

  auto* run = app.add_subcommand("run", "run one experiment");
  run->add_option("--config", config_path, "config file (JSON, comments allowed)")
      ->required();

  auto* batch = app.add_subcommand("batch", "run many experiments with derived seeds");
  batch->add_option("--config", config_path, "config file")->required();
  batch->add_option("--runs", n_runs, "number of runs")->required();
  batch->add_option("--parallelism", parallelism, "worker threads");

  auto* metrics_cmd = app.add_subcommand("metrics", "compute metric reports and aggregates");
  metrics_cmd->add_option("logs", log_paths, "run logs")->required();

  auto* heatmap = app.add_subcommand("heatmap", "export person-job association matrices");
  heatmap->add_option("logs", log_paths, "run logs")->required();
  heatmap->add_option("--mode", mode, "single or pooled");

  auto* ablation = app.add_subcommand("ablation", "paired neutral/demographic runs");
  ablation->add_option("--config", config_path, "config file")->required();
  ablation->add_option("--profiles", profiles_path, "demographic profiles JSON")->required();

  auto* llm_eval = app.add_subcommand("llm-eval", "two-stage qualitative evaluation");
  llm_eval->add_option("--log", log_path, "run log")->required();
  llm_eval->add_option("--backend-config", backend_config,
                       "LLM endpoint config; omit for the rule-based evaluator");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (seed_set) opt.seed = seed_value;

  if (run->parsed()) return cmd_run(config_path, opt);
  if (batch->parsed()) return cmd_batch(config_path, n_runs, parallelism, opt);
  if (metrics_cmd->parsed()) return cmd_metrics(log_paths, opt);
  if (heatmap->parsed()) return cmd_heatmap(log_paths, mode, opt);
  if (ablation->parsed()) return cmd_ablation(config_path, profiles_path, opt);
  if (llm_eval->parsed()) return cmd_llm_eval(log_path, backend_config, opt);
  return kExitOk;
}

}  // namespace stereosim::cli
