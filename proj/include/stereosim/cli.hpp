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

#ifndef STEREOSIM_CLI_HPP
#define STEREOSIM_CLI_HPP

#include <optional>
#include <string>
#include <vector>

#include "stereosim/types.hpp"

namespace stereosim::cli {

// Exit codes: 0 success, 2 invalid configuration or input, 3 transport
// exhaustion / partial run.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPartial = 3;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;  // --seed override
  std::string out_dir = ".";
  int verbosity = 1;
};

// Config files are JSON with // and /* */ comments permitted.
SimConfig load_config(const std::string& path);
std::vector<DemographicProfile> load_profiles(const std::string& path);

int cmd_run(const std::string& config_path, const GlobalOptions& opt,
            std::string* log_path_out = nullptr);
int cmd_batch(const std::string& config_path, int n_runs, int parallelism,
              const GlobalOptions& opt);
int cmd_metrics(const std::vector<std::string>& log_paths, const GlobalOptions& opt);
int cmd_heatmap(const std::vector<std::string>& log_paths, const std::string& mode,
                const GlobalOptions& opt);
int cmd_ablation(const std::string& config_path, const std::string& profiles_path,
                 const GlobalOptions& opt);
int cmd_llm_eval(const std::string& log_path, const std::string& backend_config_path,
                 const GlobalOptions& opt);

int run_cli(int argc, const char* const* argv);

}  // namespace stereosim::cli

#endif  // STEREOSIM_CLI_HPP
