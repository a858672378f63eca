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

// Weak-coupling Markovian propagation between control operations and the
// heat/work bookkeeping along each segment.
//
// Conventions: energies in the units of the Hamiltonian (hbar*omega_c for
// the cavity), entropies in nats, beta dimensionless (beta times energy
// unit). Rates are 1/time. The coherent part of the generator is
// -i * coherent_scale * [H, rho]; the cavity runs in the rotating frame with
// coherent_scale = 0 while H still carries the energy.

#include <cstddef>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "oqst/qmath.hpp"

namespace oqst {

struct Dissipator {
  Matrix jump;
  double rate = 0.0;
};

class ThermalGenerator {
 public:
  ThermalGenerator(Matrix hamiltonian, std::vector<Dissipator> dissipators, double beta,
                   double coherent_scale = 1.0);

  std::size_t dim() const { return static_cast<std::size_t>(hamiltonian_.rows()); }
  const Matrix& hamiltonian() const { return hamiltonian_; }
  const std::vector<Dissipator>& dissipators() const { return dissipators_; }
  double beta() const { return beta_; }
  double coherent_scale() const { return coherent_scale_; }

  ThermalGenerator with_hamiltonian(Matrix h) const;

  Matrix apply(const Matrix& rho) const;
  // Row-major vectorization: vec(rho)[i*d + j] = rho(i, j).
  Matrix superoperator() const;

  /// Classical rate matrix R[m][n] acting on populations. Only defined when
  /// the Hamiltonian is diagonal and every jump operator maps basis states to
  /// basis states; throws DomainError otherwise. Columns sum to zero.
  RealMatrix population_rates() const;

 private:
  Matrix hamiltonian_;
  std::vector<Dissipator> dissipators_;
  double beta_;
  double coherent_scale_;
};

double bose_einstein_occupation(double omega_c, double temperature);
// hbar*omega_c / (k_B T)
double dimensionless_beta(double omega_c, double temperature);

Matrix annihilation(std::size_t cutoff);
Matrix number_operator(std::size_t cutoff);

/// Thermal damping of a truncated cavity mode (Fock states 0..cutoff):
/// jump a at rate (1+N_th)/T_c and a^dag at rate N_th/T_c, H = a^dag a in
/// units of hbar*omega_c, rotating frame.
ThermalGenerator thermal_cavity_generator(double omega_c, double temperature, double lifetime_tc,
                                          std::size_t cutoff);

/// Qubit with H = (omega/2) sigma_z damped by sigma_- at rate gamma(1+N) and
/// pumped by sigma_+ at rate gamma N, N = 1/(e^{beta omega} - 1).
ThermalGenerator thermal_qubit_generator(double omega, double beta, double gamma);

enum class PropagationMethod { exact, first_order };

/// Precomputed map for one (generator, dt, method).
class Propagator {
 public:
  Propagator(const ThermalGenerator& gen, double dt, PropagationMethod method);

  DensityOperator apply(const DensityOperator& rho) const;
  // Raw linear action on any d x d block (no positivity clamp).
  Matrix apply_linear(const Matrix& block) const;
  // The map on the leading factor of a (dim * rest_dim)-square joint
  // operator, identity on the rest.
  Matrix apply_to_leading_factor(const Matrix& joint, std::size_t rest_dim) const;
  double dt() const { return dt_; }
  PropagationMethod method() const { return method_; }

 private:
  std::size_t dim_;
  double dt_;
  PropagationMethod method_;
  Matrix map_;  // d^2 x d^2
};

DensityOperator propagate(const ThermalGenerator& gen, const DensityOperator& rho, double dt,
                          PropagationMethod method);

/// Population counterpart of Propagator for generators with a classical
/// structure (see ThermalGenerator::population_rates).
class PopulationPropagator {
 public:
  PopulationPropagator(const ThermalGenerator& gen, double dt, PropagationMethod method);
  std::vector<double> apply(std::span<const double> p) const;

 private:
  RealMatrix map_;
  PropagationMethod method_;
};

/// Hamiltonian schedule H(lambda_t). Piecewise-constant by default; a
/// continuous schedule is integrated with left-endpoint Riemann sums.
class Protocol {
 public:
  static Protocol constant(Matrix h);
  // (start time, Hamiltonian) knots, sorted by time; H(t) is the last knot
  // with start <= t (the first knot before all others).
  static Protocol piecewise(std::vector<std::pair<double, Matrix>> knots);
  static Protocol continuous(std::function<Matrix(double)> schedule);

  Matrix at(double t) const;
  bool is_constant() const { return kind_ == Kind::constant; }

 private:
  enum class Kind { constant, piecewise, continuous };
  Kind kind_ = Kind::constant;
  std::vector<std::pair<double, Matrix>> knots_;
  std::function<Matrix(double)> schedule_;
};

struct SegmentResult {
  double work = 0.0;
  double heat = 0.0;
  DensityOperator rho_end = DensityOperator::basis_state(1, 0);
};

/// Propagates rho_start over [t_start, t_end] under `protocol` and splits the
/// energy change into work (sum of tr{dH rho}) and heat (sum of tr{H drho}).
/// Constant protocols propagate in one step; otherwise `substeps` equal
/// substeps are used, switching H at the end of each substep.
SegmentResult heat_work_segment(const ThermalGenerator& gen, const Protocol& protocol,
                                const DensityOperator& rho_start, double t_start, double t_end,
                                std::size_t substeps = 100,
                                PropagationMethod method = PropagationMethod::exact);

}  // namespace oqst
