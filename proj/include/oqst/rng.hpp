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

// Per-trajectory random streams. Stream i of master seed s is seeded from a
// SplitMix64 hash of (s, i), so trajectories can be sampled in any order or
// on any number of workers and still draw identical numbers.

#include <cstdint>
#include <random>
#include <span>

namespace oqst {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class TrajectoryRng {
 public:
  TrajectoryRng(std::uint64_t master_seed, std::uint64_t stream)
      : engine_(splitmix64(splitmix64(master_seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL))) {}

  // Uniform on [0, 1) with 53 random bits; independent of the standard
  // library's distribution implementations.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Inverse-CDF selection in the given (ascending label) order: the first
/// index whose cumulative mass exceeds u. Branches below 1e-15 are never
/// chosen. Throws InvariantViolation if no branch is possible.
std::size_t select_branch(std::span<const double> probabilities, double u);

}  // namespace oqst
