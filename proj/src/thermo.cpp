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

#include "oqst/thermo.hpp"

#include <array>
#include <cmath>
#include <string>

#include "oqst/errors.hpp"

namespace oqst {

double ControlEnergetics::average_q_system() const {
  double avg = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (q_ctrl_system[i]) avg += probabilities[i] * *q_ctrl_system[i];
  }
  return avg;
}

std::size_t ControlEnergetics::index_of(int label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return i;
  }
  throw DomainError("ControlEnergetics: unknown label " + std::to_string(label));
}

ControlEnergetics control_energetics(const Instrument& instr, const Matrix& h_system,
                                     const DensityOperator& rho_pre) {
  if (instr.dim() != rho_pre.dim() || static_cast<std::size_t>(h_system.rows()) != rho_pre.dim()) {
    throw DimensionError("control_energetics: instrument, Hamiltonian and state dimensions differ");
  }
  ControlEnergetics out;
  const Matrix averaged = instr.apply_average(rho_pre.matrix());
  const double e_avg = expectation(h_system, averaged);
  out.w_ctrl_system = e_avg - expectation(h_system, rho_pre.matrix());
  for (std::size_t i = 0; i < instr.outcome_count(); ++i) {
    const Matrix branch = instr.apply_branch(i, rho_pre.matrix());
    const double p = std::max(branch.trace().real(), 0.0);
    out.labels.push_back(instr.branches()[i].label);
    out.probabilities.push_back(p);
    if (p >= kImpossibleOutcome) {
      out.q_ctrl_system.emplace_back(expectation(h_system, branch) / p - e_avg);
      out.q_ctrl_unit.emplace_back(0.0);
    } else {
      out.q_ctrl_system.emplace_back(std::nullopt);
      out.q_ctrl_unit.emplace_back(std::nullopt);
    }
  }
  return out;
}

ControlEnergetics control_energetics(const Instrument& instr, const Matrix& h_system,
                                     const Matrix& h_unit, const DensityOperator& rho_pre,
                                     const StinespringDilation& dilation) {
  ControlEnergetics out = control_energetics(instr, h_system, rho_pre);
  if (dilation.system_dim != instr.dim() ||
      static_cast<std::size_t>(h_unit.rows()) != dilation.unit_dim) {
    throw DimensionError("control_energetics: unit Hamiltonian does not match the dilation");
  }
  const std::array<std::size_t, 2> dims{dilation.system_dim, dilation.unit_dim};
  const std::array<std::size_t, 1> unit{1};
  const Matrix joint = tensor_product(rho_pre.matrix(), dilation.unit_state.matrix());
  const Matrix rotated = dilation.joint_unitary * joint * dilation.joint_unitary.adjoint();
  const Matrix unit_after = partial_trace(rotated, dims, unit);
  const double e_unit_rotated = expectation(h_unit, unit_after);
  out.w_ctrl_unit = e_unit_rotated - expectation(h_unit, dilation.unit_state.matrix());
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    if (!out.q_ctrl_system[i]) continue;
    const Matrix p = tensor_product(identity(dilation.system_dim),
                                    dilation.projector_for(out.labels[i]));
    const Matrix branch_unit = partial_trace(Matrix(p * rotated * p), dims, unit);
    out.q_ctrl_unit[i] = expectation(h_unit, branch_unit) / out.probabilities[i] - e_unit_rotated;
  }
  return out;
}

double StepLedger::first_law_residual() const {
  return (energy_end - energy_start) + unit_energy_change - work() - heat();
}

double stochastic_entropy(double log_prob, const DensityOperator& tracked_state) {
  if (log_prob < -1e-12) throw DomainError("stochastic_entropy: negative -ln p");
  return log_prob + von_neumann_entropy(tracked_state);
}

StepLedger entropy_production_step(StepLedger ledger, double beta, bool enforce_segment_law) {
  ledger.sigma_ctrl = (ledger.entropy_end - ledger.entropy_pre_ctrl) - beta * ledger.q_ctrl_system;
  ledger.sigma_seg = (ledger.entropy_pre_ctrl - ledger.entropy_start) - beta * ledger.q_seg;
  if (enforce_segment_law && ledger.sigma_seg < kSegmentBugThreshold) {
    throw InvariantViolation("segment entropy production " + std::to_string(ledger.sigma_seg) +
                             " at step " + std::to_string(ledger.step));
  }
  return ledger;
}

LemmaReport check_measurement_entropy_lemma(const DensityOperator& rho,
                                            std::span<const Matrix> positive_ops) {
  if (positive_ops.empty()) throw DomainError("lemma: empty operator family");
  Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(rho.dim()), static_cast<Eigen::Index>(rho.dim()));
  for (const auto& p : positive_ops) {
    if (static_cast<std::size_t>(p.rows()) != rho.dim() || p.rows() != p.cols()) {
      throw DimensionError("lemma: operator dimension differs from state");
    }
    if (hermiticity_defect(p) > 1e-10 || hermitian_eigenvalues(p).minCoeff() < -1e-10) {
      throw DomainError("lemma: operator is not positive");
    }
    sum += p * p;
  }
  if (max_abs(sum - identity(rho.dim())) > 1e-10) {
    throw DomainError("lemma: sum of squared operators is not the identity");
  }

  LemmaReport r;
  r.lhs = von_neumann_entropy(rho);
  std::vector<double> probs;
  double conditional = 0.0;
  for (const auto& p : positive_ops) {
    const Matrix branch = p * rho.matrix() * p;
    const double pn = std::max(branch.trace().real(), 0.0);
    probs.push_back(pn);
    if (pn >= kImpossibleOutcome) conditional += pn * von_neumann_entropy(Matrix(branch / pn));
  }
  r.rhs = shannon_entropy(probs) + conditional;
  r.pass = r.lhs <= r.rhs + 1e-9;
  return r;
}

}  // namespace oqst
