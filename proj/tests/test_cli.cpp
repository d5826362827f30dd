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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "stereosim/cli.hpp"
#include "stereosim/prompts.hpp"
#include "stereosim/qualitative.hpp"
#include "stereosim/runlog.hpp"

using namespace stereosim;
using namespace stereosim::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string write_config(const testing::TempDir& dir, const std::string& name,
                         const std::string& body) {
  const std::string path = dir.file(name);
  std::ofstream(path) << body;
  return path;
}

const char* kScriptedConfig = R"({
  // four agents, uniform-random scripted policy
  "n_agents": 4,
  "episodes": 5,
  "p0": 0.8,        // success probability
  "seed": 11,
  "mode": "random",
  "backends": {"kind": "scripted_uniform_random"}
})";

// Log lines with the meta record stripped of its timestamp, for determinism
// comparisons.
std::vector<std::string> comparable_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    auto j = json::parse(line);
    if (j.at("type") == "meta") j.erase("started_at");
    lines.push_back(j.dump());
  }
  return lines;
}

}  // namespace

TEST_CASE("load_config parses commented JSON and applies defaults") {
  testing::TempDir dir("config");
  auto path = write_config(dir, "c.json", kScriptedConfig);
  SimConfig c = load_config(path);
  CHECK(c.n_agents == 4);
  CHECK(c.seed == 11);
  CHECK(c.tasks.size() == 5);  // default task set when none given
  CHECK(c.backends.size() == 1);
  CHECK(c.backends[0].kind == BackendKind::ScriptedUniformRandom);
  CHECK_THROWS_AS(load_config(dir.file("missing.json")), ConfigError);
}

TEST_CASE("cmd_run writes a complete log and returns 0") {
  testing::TempDir dir("run");
  auto config_path = write_config(dir, "c.json", kScriptedConfig);
  GlobalOptions opt;
  opt.out_dir = dir.file("out");
  opt.verbosity = 0;
  std::string log_path;
  CHECK(cmd_run(config_path, opt, &log_path) == kExitOk);
  auto log = logio::read_runlog(log_path);
  CHECK(log.meta.seed == 11);
  CHECK(log.episodes.size() == 5);
  CHECK(log.evaluations.size() == 1);
  CHECK(log.end_status == "ok");
}

TEST_CASE("the seed override changes the log; a rerun is byte-identical modulo meta") {
  testing::TempDir dir("determinism");
  auto config_path = write_config(dir, "c.json", kScriptedConfig);
  GlobalOptions opt;
  opt.verbosity = 0;

  opt.out_dir = dir.file("a");
  std::string log_a;
  REQUIRE(cmd_run(config_path, opt, &log_a) == kExitOk);
  opt.out_dir = dir.file("b");
  std::string log_b;
  REQUIRE(cmd_run(config_path, opt, &log_b) == kExitOk);
  CHECK(comparable_lines(log_a) == comparable_lines(log_b));

  opt.out_dir = dir.file("c");
  opt.seed = 999;
  std::string log_c;
  REQUIRE(cmd_run(config_path, opt, &log_c) == kExitOk);
  CHECK(logio::read_runlog(log_c).meta.seed == 999);
  CHECK(comparable_lines(log_a) != comparable_lines(log_c));
}

TEST_CASE("cmd_run rejects invalid configs with exit 2") {
  testing::TempDir dir("badconfig");
  auto config_path = write_config(dir, "bad.json", R"({
    "n_agents": 1, "episodes": 5, "p0": 1.7, "seed": 1,
    "backends": {"kind": "scripted_silent"}
  })");
  GlobalOptions opt;
  opt.out_dir = dir.file("out");
  opt.verbosity = 0;
  CHECK(cmd_run(config_path, opt) == kExitConfig);
}

TEST_CASE("cmd_batch derives seeds, runs in parallel, and writes a manifest") {
  testing::TempDir dir("batch");
  auto config_path = write_config(dir, "c.json", kScriptedConfig);
  GlobalOptions opt;
  opt.verbosity = 0;
  opt.seed = 10;

  opt.out_dir = dir.file("serial");
  REQUIRE(cmd_batch(config_path, 3, 1, opt) == kExitOk);
  opt.out_dir = dir.file("parallel");
  REQUIRE(cmd_batch(config_path, 3, 4, opt) == kExitOk);

  auto manifest = json::parse(testing::slurp(dir.file("serial") + "/manifest.json"));
  REQUIRE(manifest.at("runs").size() == 3);
  std::set<std::uint64_t> seeds;
  for (const auto& r : manifest["runs"]) {
    seeds.insert(r.at("seed").get<std::uint64_t>());
    CHECK(r.at("status") == "ok");
  }
  CHECK(seeds == std::set<std::uint64_t>{10, 11, 12});

  // Parallelism must not change any log content.
  for (std::uint64_t s : {10, 11, 12}) {
    const std::string name = "run_" + std::to_string(s) + ".ndjson";
    CHECK(comparable_lines(dir.file("serial") + "/" + name) ==
          comparable_lines(dir.file("parallel") + "/" + name));
  }
  // Manifests agree after normalizing the per-directory paths.
  auto normalized = [](const std::string& path) {
    auto j = json::parse(testing::slurp(path));
    for (auto& r : j["runs"]) r.erase("path");
    for (auto& r : j["failures"]) r.erase("path");
    return j;
  };
  CHECK(normalized(dir.file("serial") + "/manifest.json") ==
        normalized(dir.file("parallel") + "/manifest.json"));
}

TEST_CASE("failing runs are recorded in the manifest while the batch exits 0") {
  testing::TempDir dir("batchfail");
  // LlmHttp with a fixture dir that has no fixtures: every chat call fails
  // fatally, runs persist partial logs, the batch itself succeeds.
  auto config_path = write_config(dir, "c.json", R"({
    "n_agents": 2, "episodes": 2, "seed": 5,
    "backends": {"kind": "llm_http", "model": "m", "endpoint": "http://unused/v1",
                  "fixture_dir": ")" + dir.file("nofixtures") + R"("}
  })");
  fs::create_directories(dir.file("nofixtures"));
  GlobalOptions opt;
  opt.verbosity = 0;
  opt.out_dir = dir.file("out");
  CHECK(cmd_batch(config_path, 2, 1, opt) == kExitOk);
  auto manifest = json::parse(testing::slurp(dir.file("out") + "/manifest.json"));
  CHECK(manifest.at("failures").size() == 2);
  // The partial logs are still parseable prefixes with an error marker.
  auto log = logio::read_runlog(dir.file("out") + "/run_5.ndjson");
  CHECK(log.end_status == "partial");
  CHECK_FALSE(log.errors.empty());
}

TEST_CASE("cmd_metrics writes reports, aggregates, and histograms") {
  testing::TempDir dir("metrics");
  auto config_path = write_config(dir, "c.json", kScriptedConfig);
  GlobalOptions opt;
  opt.verbosity = 0;
  opt.out_dir = dir.file("runs");
  REQUIRE(cmd_batch(config_path, 3, 2, opt) == kExitOk);

  std::vector<std::string> logs;
  for (std::uint64_t s : {11, 12, 13})
    logs.push_back(dir.file("runs") + "/run_" + std::to_string(s) + ".ndjson");

  SUBCASE("single log: report without aggregate") {
    opt.out_dir = dir.file("m1");
    REQUIRE(cmd_metrics({logs[0]}, opt) == kExitOk);
    CHECK(fs::exists(dir.file("m1") + "/run_11.metrics.json"));
    CHECK_FALSE(fs::exists(dir.file("m1") + "/aggregate.json"));
    auto rep = json::parse(testing::slurp(dir.file("m1") + "/run_11.metrics.json"));
    CHECK(rep.contains("inputs_digest"));
  }
  SUBCASE("several logs: aggregate plus 10-bin histograms") {
    opt.out_dir = dir.file("m3");
    REQUIRE(cmd_metrics(logs, opt) == kExitOk);
    CHECK(fs::exists(dir.file("m3") + "/aggregate.json"));
    for (const char* metric : {"rsi", "gbc", "cai", "sii"}) {
      const std::string hist = testing::slurp(dir.file("m3") + "/hist_" + metric + ".csv");
      CHECK(hist.rfind("bin_start,bin_end,count\n", 0) == 0);
      CHECK(std::count(hist.begin(), hist.end(), '\n') == 11);  // header + 10 bins
    }
    const std::string csv = testing::slurp(dir.file("m3") + "/metrics.csv");
    CHECK(csv.find("inputs_digest") != std::string::npos);
  }
  SUBCASE("corrupt logs are skipped; nothing readable is exit 2") {
    const std::string junk = dir.file("junk.ndjson");
    std::ofstream(junk) << "not json\n";
    opt.out_dir = dir.file("mjunk");
    CHECK(cmd_metrics({junk}, opt) == kExitConfig);
    CHECK(cmd_metrics({junk, logs[0]}, opt) == kExitOk);
  }
}

TEST_CASE("cmd_heatmap emits per-log and pooled matrices with the CSV contract") {
  testing::TempDir dir("heatmap");
  auto config_path = write_config(dir, "c.json", kScriptedConfig);
  GlobalOptions opt;
  opt.verbosity = 0;
  opt.out_dir = dir.file("runs");
  REQUIRE(cmd_batch(config_path, 2, 2, opt) == kExitOk);
  std::vector<std::string> logs{dir.file("runs") + "/run_11.ndjson",
                                dir.file("runs") + "/run_12.ndjson"};

  opt.out_dir = dir.file("single");
  REQUIRE(cmd_heatmap(logs, "single", opt) == kExitOk);
  const std::string csv = testing::slurp(dir.file("single") + "/run_11.matrix.csv");
  CHECK(csv.rfind("agent,", 0) == 0);
  CHECK(csv.find("person_1,") != std::string::npos);

  opt.out_dir = dir.file("pooled");
  REQUIRE(cmd_heatmap(logs, "pooled", opt) == kExitOk);
  CHECK(fs::exists(dir.file("pooled") + "/pooled_matrix.csv"));

  SUBCASE("logs without evaluations exit 2") {
    auto silent_path = write_config(dir, "silent.json", R"({
      "n_agents": 2, "episodes": 1, "seed": 3,
      "backends": {"kind": "scripted_silent"}
    })");
    opt.out_dir = dir.file("silentrun");
    std::string silent_log;
    REQUIRE(cmd_run(silent_path, opt, &silent_log) == kExitOk);
    opt.out_dir = dir.file("silentmat");
    CHECK(cmd_heatmap({silent_log}, "single", opt) == kExitConfig);
  }
  SUBCASE("unknown modes exit 2") {
    CHECK(cmd_heatmap(logs, "sideways", opt) == kExitConfig);
  }
}

TEST_CASE("cmd_ablation pairs neutral and demographic runs on one seed") {
  testing::TempDir dir("ablation");
  auto config_path = write_config(dir, "c.json", R"({
    "n_agents": 2, "episodes": 4, "seed": 21,
    "backends": {"kind": "scripted_uniform_random"}
  })");
  auto profiles_path = write_config(dir, "profiles.json", R"([
    {"name": "Andrew He", "age": 28, "gender": "man", "appearance": "glasses"},
    {"name": "Esperanza Morales", "age": 32, "gender": "woman", "appearance": "long dark hair"}
  ])");
  GlobalOptions opt;
  opt.verbosity = 0;
  opt.out_dir = dir.file("out");
  REQUIRE(cmd_ablation(config_path, profiles_path, opt) == kExitOk);

  auto neutral = logio::read_runlog(dir.file("out") + "/neutral.ndjson");
  auto demographic = logio::read_runlog(dir.file("out") + "/demographic.ndjson");
  CHECK(neutral.meta.seed == demographic.meta.seed);

  // Identical Td/Sn streams: prompts and profiles never touch the RNG.
  auto stream_of = [](const logio::RunLog& log) {
    std::vector<Event> out;
    for (const auto& rec : log.episodes)
      for (const auto& e : rec.events)
        if (e.kind() != EventKind::Im) out.push_back(e);
    return out;
  };
  CHECK(stream_of(neutral) == stream_of(demographic));

  for (const auto& prompt : neutral.meta.system_prompts)
    CHECK(prompts::blocklist_hits(prompt).empty());
  bool found_profile = false;
  for (const auto& prompt : demographic.meta.system_prompts)
    if (prompt.find("Andrew He") != std::string::npos &&
        prompt.find("glasses") != std::string::npos)
      found_profile = true;
  CHECK(found_profile);

  SUBCASE("profile count mismatch exits 2") {
    auto short_profiles = write_config(dir, "short.json", R"([
      {"name": "Only One", "age": 30, "gender": "man", "appearance": "hat"}
    ])");
    CHECK(cmd_ablation(config_path, short_profiles, opt) == kExitConfig);
  }
}

TEST_CASE("cmd_llm_eval writes schema-valid flags and is deterministic") {
  testing::TempDir dir("llmeval");
  auto config_path = write_config(dir, "c.json", R"({
    "n_agents": 3, "episodes": 3, "seed": 4,
    "backends": {"kind": "scripted_silent"}
  })");
  GlobalOptions opt;
  opt.verbosity = 0;
  opt.out_dir = dir.file("run");
  std::string log_path;
  REQUIRE(cmd_run(config_path, opt, &log_path) == kExitOk);

  opt.out_dir = dir.file("eval1");
  REQUIRE(cmd_llm_eval(log_path, "", opt) == kExitOk);
  auto flags = json::parse(testing::slurp(dir.file("eval1") + "/flags.json"));
  std::string err;
  CHECK(qualitative::validate_bias_flags_json(flags, &err));
  for (const char* f : {"stereotype", "strong_stereotype", "halo", "confirmation",
                        "role_congruity", "self_serving"})
    CHECK(flags.at(f) == false);
  CHECK(fs::exists(dir.file("eval1") + "/report.txt"));

  opt.out_dir = dir.file("eval2");
  REQUIRE(cmd_llm_eval(log_path, "", opt) == kExitOk);
  CHECK(testing::slurp(dir.file("eval1") + "/flags.json") ==
        testing::slurp(dir.file("eval2") + "/flags.json"));
  CHECK(testing::slurp(dir.file("eval1") + "/report.txt") ==
        testing::slurp(dir.file("eval2") + "/report.txt"));
}
