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

// Random test objects: Haar unitaries, Ginibre states, instruments cut from
// random isometries. Used by the property suites.

#include <cstddef>
#include <random>
#include <vector>

#include "oqst/channels.hpp"
#include "oqst/qmath.hpp"

namespace oqst::random {

using Engine = std::mt19937_64;

Matrix ginibre(std::size_t rows, std::size_t cols, Engine& rng);
Matrix unitary(std::size_t dim, Engine& rng);
Matrix hermitian(std::size_t dim, Engine& rng);
Vector pure_vector(std::size_t dim, Engine& rng);
DensityOperator pure_state(std::size_t dim, Engine& rng);

// rank == 0 means full rank.
DensityOperator density(std::size_t dim, Engine& rng, std::size_t rank = 0);

/// Complete instrument: `kraus_per_outcome[r]` Kraus operators for label r,
/// cut from one Haar-random isometry.
Instrument instrument(std::size_t dim, const std::vector<std::size_t>& kraus_per_outcome,
                      Engine& rng);

/// Positive operators {P_n} with sum P_n^2 = 1: square roots of a random POVM.
std::vector<Matrix> sqrt_povm(std::size_t dim, std::size_t outcomes, Engine& rng);

}  // namespace oqst::random
