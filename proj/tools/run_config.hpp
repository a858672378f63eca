// Copyright 2026 The OQST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Run configuration for the command-line tool: a flat JSON object whose
// keys mirror the flags, plus the scenario runners that write CSV/JSON
// outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "oqst/scenarios.hpp"

namespace oqst::cli {

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitInvariant = 3;
inline constexpr int kExitIo = 4;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string scenario = "cavity";  // cavity | projective | tpm | classical | verify
  std::uint64_t seed = 42;
  std::string out = "results";
  int workers = 0;

  // Shared by cavity (defaults 300 / 2000) and classical (10 / 20000).
  std::optional<std::size_t> steps;
  std::optional<std::size_t> trajectories;

  CavityConfig cavity;  // steps, trajectories and seed are filled from above

  // projective: H = (omega/2) sigma_z, state cos(theta/2)|0> + sin(theta/2)|1>
  double omega = 1.0;
  double theta = 1.5707963267948966;

  // tpm and classical
  double beta = 1.0;

  // classical
  std::string model = "two";  // two | three
  std::string mode = "enumerate";  // enumerate | gillespie
  double dt = 0.01;
  double gamma = 1.0;
  double gap = 1.0;

  // verify
  bool acceptance = false;
  std::size_t random_cases = 500;

  bool operator==(const RunConfig&) const = default;

  // Throws ConfigError.
  void validate() const;
  CavityConfig resolved_cavity() const;
};

nlohmann::json to_json(const RunConfig& config);
// Starts from `base` and overrides every key present. Unknown keys and type
// mismatches throw ConfigError.
RunConfig from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

// Twelve significant digits, as used in every output file.
std::string format_number(double x);

/// Runs the configured scenario and writes its files under config.out.
/// Returns the exit status; progress and check lines go to `log`.
int execute(const RunConfig& config, std::ostream& log);

}  // namespace oqst::cli
