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

#ifndef STEREOSIM_TESTS_HELPERS_HPP
#define STEREOSIM_TESTS_HELPERS_HPP

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "stereosim/engine.hpp"
#include "stereosim/types.hpp"

namespace stereosim::testing {

// Four tasks covering all warmth x competence quadrants (|T| = 4 tests).
inline std::vector<TaskType> four_tasks() {
  auto all = default_tasks();
  return {all[0], all[1], all[2], all[3]};
}

inline SimConfig scripted_config(int n, int episodes, BackendKind kind,
                                 std::uint64_t seed, std::vector<TaskType> tasks = {}) {
  SimConfig c;
  c.n_agents = n;
  c.episodes = episodes;
  c.seed = seed;
  c.tasks = tasks.empty() ? four_tasks() : std::move(tasks);
  BackendSpec b;
  b.kind = kind;
  c.backends = {b};
  return c;
}

inline logio::RunLog run_scripted(const SimConfig& config,
                                  logio::RunLogWriter* writer = nullptr) {
  engine::RunDeps deps = engine::make_run_deps(config);
  return engine::run_experiment(config, deps, writer);
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("stereosim_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::string out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return out;
}

// Spearman rank correlation of values against their positions 0..n-1.
inline double spearman_vs_index(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (values[j] < values[i]) less += 1;
      if (values[j] == values[i]) equal += 1;
    }
    ranks[i] = less + (equal + 1) / 2.0;  // average rank for ties
  }
  double mean_rank = (n + 1) / 2.0;
  double num = 0, den_a = 0, den_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = static_cast<double>(i + 1) - mean_rank;
    const double b = ranks[i] - mean_rank;
    num += a * b;
    den_a += a * a;
    den_b += b * b;
  }
  if (den_a == 0 || den_b == 0) return 0.0;
  return num / std::sqrt(den_a * den_b);
}

}  // namespace stereosim::testing

#endif  // STEREOSIM_TESTS_HELPERS_HPP
