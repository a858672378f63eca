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

#include "oqst/rng.hpp"

#include "oqst/channels.hpp"
#include "oqst/errors.hpp"

namespace oqst {

std::size_t select_branch(std::span<const double> probabilities, double u) {
  double cumulative = 0.0;
  std::size_t last_possible = probabilities.size();
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] < kImpossibleOutcome) continue;
    cumulative += probabilities[i];
    last_possible = i;
    if (u < cumulative) return i;
  }
  if (last_possible == probabilities.size()) {
    throw InvariantViolation("select_branch: every branch is impossible");
  }
  // Round-off left the total a hair below u.
  return last_possible;
}

}  // namespace oqst
