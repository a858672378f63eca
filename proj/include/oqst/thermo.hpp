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

// Per-trajectory thermodynamic ledger: work and heat of control operations,
// stochastic entropy, and the split of entropy production into a control
// part and a free-evolution part.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "oqst/channels.hpp"
#include "oqst/qmath.hpp"

namespace oqst {

inline constexpr double kFirstLawTolerance = 1e-10;
inline constexpr double kSecondLawTolerance = 1e-10;
// Below this a negative segment entropy production is a bookkeeping bug,
// not round-off.
inline constexpr double kSegmentBugThreshold = -1e-6;

/// Energetics of one control operation applied to rho_pre. Branch data is
/// in the instrument's label order; impossible branches carry no heat.
struct ControlEnergetics {
  double w_ctrl_system = 0.0;
  double w_ctrl_unit = 0.0;
  std::vector<int> labels;
  std::vector<double> probabilities;
  std::vector<std::optional<double>> q_ctrl_system;
  std::vector<std::optional<double>> q_ctrl_unit;

  double average_q_system() const;
  std::size_t index_of(int label) const;
};

/// System parts only; the unit Hamiltonian is taken to be trivial.
ControlEnergetics control_energetics(const Instrument& instr, const Matrix& h_system,
                                     const DensityOperator& rho_pre);

/// System parts from the instrument, unit parts from the dilation with unit
/// Hamiltonian h_unit.
ControlEnergetics control_energetics(const Instrument& instr, const Matrix& h_system,
                                     const Matrix& h_unit, const DensityOperator& rho_pre,
                                     const StinespringDilation& dilation);

/// One interval (t_{n-1}, t_n]: the free segment followed by control n.
/// Energies refer to the system unless marked unit; entropies are the
/// stochastic entropy -ln p(r_1..r_k) + S_vN(tracked state).
struct StepLedger {
  std::size_t step = 0;
  double time = 0.0;
  int kind = 0;
  int outcome = 0;
  double logp_increment = 0.0;  // -ln p(r_n | r_1..r_{n-1})

  double energy_start = 0.0;     // E_S(t_{n-1}^+)
  double energy_pre_ctrl = 0.0;  // E_S(t_n^-)
  double energy_end = 0.0;       // E_S(t_n^+)
  double unit_energy_change = 0.0;

  double w_seg = 0.0;
  double q_seg = 0.0;
  double w_ctrl_system = 0.0;
  double w_ctrl_unit = 0.0;
  double q_ctrl_system = 0.0;
  double q_ctrl_unit = 0.0;

  double entropy_start = 0.0;
  double entropy_pre_ctrl = 0.0;
  double entropy_end = 0.0;

  double sigma_ctrl = 0.0;
  double sigma_seg = 0.0;

  double work() const { return w_seg + w_ctrl_system + w_ctrl_unit; }
  double heat() const { return q_seg + q_ctrl_system + q_ctrl_unit; }
  // dE_S + dE_U - W - Q over the whole interval.
  double first_law_residual() const;
};

double stochastic_entropy(double log_prob, const DensityOperator& tracked_state);

/// Fills sigma_ctrl and sigma_seg from the entropy and heat entries. Throws
/// InvariantViolation when sigma_seg is below kSegmentBugThreshold, unless
/// the check is switched off (the segment law only holds for generators
/// thermal with respect to the current Hamiltonian).
StepLedger entropy_production_step(StepLedger ledger, double beta,
                                   bool enforce_segment_law = true);

struct LemmaReport {
  double lhs = 0.0;  // S_vN(rho)
  double rhs = 0.0;  // S_Sh(p) + sum_n p_n S_vN(rho_n)
  bool pass = false;
};

/// Checks S(rho) <= H(p) + sum p_n S(rho_n) for positive operators with
/// sum P_n^2 = 1. Throws DomainError for an invalid operator family.
LemmaReport check_measurement_entropy_lemma(const DensityOperator& rho,
                                            std::span<const Matrix> positive_ops);

}  // namespace oqst
