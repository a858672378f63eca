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

// Programmatic checks shared by the acceptance binary and `oqst verify`:
// the ten acceptance criteria plus the per-module property suites. Every
// check is deterministic for a given seed.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "oqst/scenarios.hpp"

namespace oqst {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteOptions {
  std::uint64_t seed = 7;
  std::size_t random_cases = 500;      // random instruments / states per property
  std::size_t monte_carlo_samples = 100000;
  std::size_t cavity_trajectories = 2000;
  std::size_t cavity_steps = 300;
  int workers = 0;
};

/// Acceptance criteria 1-10, in order, one result each.
std::vector<CheckResult> acceptance_suite(const SuiteOptions& options);

/// Module-level invariants (linear algebra, instruments, propagation,
/// ledgers, reproducibility, causality).
std::vector<CheckResult> property_suite(const SuiteOptions& options);

// Individual criteria, exposed for tests. The cavity criteria share one run.
struct CavityAcceptance {
  CheckResult stabilization;      // 1
  CheckResult control_entropy;    // 2
  CheckResult efficiency;         // 3
  CheckResult variance;           // 4
  CavityReport report;
  double runtime_seconds = 0.0;
};
CavityAcceptance cavity_criteria(const SuiteOptions& options);

CheckResult first_law_criterion(const SuiteOptions& options, const CavityReport& cavity);  // 5
CheckResult zero_average_heat_criterion(const SuiteOptions& options);                    // 6
CheckResult second_law_criterion(const SuiteOptions& options, const CavityReport& cavity);  // 7
CheckResult jarzynski_criterion(const SuiteOptions& options);                            // 8
CheckResult classical_limit_criterion(const SuiteOptions& options);                      // 9
CheckResult oracle_equivalence_criterion(const SuiteOptions& options);                   // 10

/// Stabilized-window helpers used by criteria 1, 2 and 4.
double window_mean(const std::vector<double>& per_step, std::size_t horizon);
/// Strict interior local maxima of eta over steps 1..last.
std::size_t count_local_maxima(const std::vector<double>& eta, std::size_t last);

}  // namespace oqst
