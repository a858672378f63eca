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

// Outcome-labeled quantum instruments: families of CP maps in operator-sum
// form whose sum is trace preserving. Also the canonical Stinespring
// dilation of an instrument into unit state + joint unitary + unit
// projectors.

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "oqst/qmath.hpp"

namespace oqst {

inline constexpr double kCompletenessTolerance = 1e-10;
inline constexpr double kImpossibleOutcome = 1e-15;

struct OutcomeBranch {
  int label = 0;
  std::vector<Matrix> kraus;
};

/// Branches are stored in ascending label order. Shapes are validated on
/// construction; completeness is not (see verify_instrument), so an
/// instrument scaled off the identity can still be built and reported on.
class Instrument {
 public:
  Instrument(std::size_t dim, std::vector<OutcomeBranch> branches);

  std::size_t dim() const { return dim_; }
  std::span<const OutcomeBranch> branches() const { return branches_; }
  std::size_t outcome_count() const { return branches_.size(); }
  std::size_t kraus_count() const;

  // One Kraus operator per branch: pure inputs stay pure.
  bool is_efficient() const;

  // Unnormalized A(r) rho for the branch at position `index`.
  Matrix apply_branch(std::size_t index, const Matrix& rho) const;
  Matrix apply_average(const Matrix& rho) const;

 private:
  std::size_t dim_;
  std::vector<OutcomeBranch> branches_;
};

struct VerificationReport {
  bool pass = false;
  double max_deviation = 0.0;
};

VerificationReport verify_instrument(const Instrument& instr);

struct BranchResult {
  int label = 0;
  double probability = 0.0;
  // Empty for impossible branches (probability below 1e-15).
  std::optional<DensityOperator> state;

  bool possible() const { return state.has_value(); }
};

std::vector<BranchResult> apply_instrument(const Instrument& instr, const DensityOperator& rho);
DensityOperator average_map(const Instrument& instr, const DensityOperator& rho);

struct StinespringDilation {
  std::size_t system_dim = 0;
  std::size_t unit_dim = 0;
  DensityOperator unit_state = DensityOperator::basis_state(1, 0);
  Matrix joint_unitary;                          // system (x) unit, system index major
  std::vector<std::pair<int, Matrix>> projectors;  // unit operators, by label

  const Matrix& projector_for(int label) const;
};

/// Minimal dilation: the unit has one basis state per Kraus operator
/// (at least two), starts in |0>, and the joint unitary extends the isometry
/// |psi>|0> -> sum_k A_k|psi>|k>. Throws DomainError if the instrument is
/// incomplete.
StinespringDilation stinespring_dilate(const Instrument& instr);

/// tr_U{P(r) V (rho (x) rho_U) V^dag P(r)}: the unnormalized branch state
/// reproduced from the dilation.
Matrix dilated_branch(const StinespringDilation& dil, const Matrix& rho, int label);

Instrument identity_instrument(std::size_t dim);
Instrument single_outcome_instrument(std::vector<Matrix> kraus);

/// Rank-one projective measurement; `basis` must be orthonormal within 1e-10.
Instrument projective_instrument(std::span<const Vector> basis);
std::vector<Vector> computational_basis(std::size_t dim);

/// Removes coherences between the given basis vectors; idempotent.
DensityOperator dephasing_map(std::span<const Vector> basis, const DensityOperator& rho);

}  // namespace oqst
