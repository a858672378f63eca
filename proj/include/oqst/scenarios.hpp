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

// The concrete experiments: photon-number stabilization in a microwave
// cavity by sensor/emitter/absorber atoms under delayed feedback, the
// single projective measurement, the two-point measurement scheme and the
// classical rate-equation limit.
//
// Cavity units: energies in hbar*omega_c, entropies in nats, temperature
// as 1/beta in the same energy unit.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oqst/channels.hpp"
#include "oqst/lindblad.hpp"
#include "oqst/qmath.hpp"
#include "oqst/thermo.hpp"
#include "oqst/trajectory.hpp"

namespace oqst {

// --- cavity atoms ------------------------------------------------------------

enum class AtomKind { sensor = 0, emitter = 1, absorber = 2 };

const char* atom_kind_name(AtomKind kind);

/// Photon-number transfer weights of one atom: weights[r](n_out, n_in) is
/// the probability of outcome r together with the move n_in -> n_out.
/// Every column of weights[0] + weights[1] sums to one.
struct AtomTransfer {
  AtomKind kind = AtomKind::sensor;
  std::array<RealMatrix, 2> weights;
};

AtomTransfer atom_transfer(AtomKind kind, int target_nt, std::size_t cutoff);

/// Efficient two-outcome instrument with Kraus operators
/// sum sqrt(w_r(n_out, n_in)) |n_out><n_in|.
Instrument atom_instrument(AtomKind kind, int target_nt, std::size_t cutoff);

/// Absorber when the estimate weighs more above n_t than on it, emitter
/// when it weighs more below, sensor otherwise (ties included).
AtomKind feedback_decision(std::span<const double> estimate, int target_nt);

// Work spent preparing one atom before it meets the cavity, in hbar*omega_a.
double atom_preparation_work(AtomKind kind);

// --- cavity experiment -------------------------------------------------------

// How the cavity lifetime T_c enters the damping. `master_equation` uses the
// coefficients (1+N_th)/(2T_c) and N_th/(2T_c) in front of D[a], D[a^dag]
// as in the cavity master equation; `lifetime` uses (1+N_th)/T_c and
// N_th/T_c directly as jump rates.
enum class DampingConvention { master_equation, lifetime };

struct CavityConfig {
  double omega_c = 2.0 * 3.14159265358979323846 * 51.1e9;  // rad/s
  double temperature = 0.8;                                   // K
  double lifetime_tc = 65e-3;                                 // s
  double step_ta = 82e-6;                                     // s
  int target_nt = 2;
  std::size_t delay = 5;
  std::size_t cutoff = 8;
  std::size_t steps = 300;
  std::size_t trajectories = 2000;
  std::uint64_t seed = 42;
  PropagationMethod method = PropagationMethod::first_order;
  DampingConvention damping = DampingConvention::master_equation;
  // Largest tolerated population in the top Fock state.
  double leak_tolerance = 1e-6;

  // Throws DomainError for unphysical or inconsistent values.
  void validate() const;
  bool operator==(const CavityConfig&) const = default;
};


/// Everything derived from a CavityConfig that the samplers share.
class CavityModel {
 public:
  explicit CavityModel(const CavityConfig& config);

  const CavityConfig& config() const { return config_; }
  const ThermalGenerator& generator() const { return generator_; }
  double beta() const { return generator_.beta(); }
  double thermal_occupation() const { return n_th_; }
  const DensityOperator& initial_state() const { return rho0_; }
  std::span<const double> initial_populations() const { return p0_; }
  double equilibrium_free_energy() const { return free_energy_eq_; }
  const AtomTransfer& transfer(AtomKind kind) const;
  const PopulationPropagator& population_propagator() const { return population_prop_; }

  // Full density-matrix formulation for the engine.
  const ControlSchedule& schedule() const { return schedule_; }
  const FeedbackPolicy& policy() const { return policy_; }
  EngineOptions engine_options() const;

 private:
  CavityConfig config_;
  ThermalGenerator generator_;
  double n_th_;
  DensityOperator rho0_;
  std::vector<double> p0_;
  double free_energy_eq_;
  std::array<AtomTransfer, 3> transfers_;
  PopulationPropagator population_prop_;
  ControlSchedule schedule_;
  FeedbackPolicy policy_;
};

/// One trajectory on the diagonal (population) representation.
struct CavityTrajectory {
  std::vector<int> outcomes;
  std::vector<AtomKind> kinds;
  std::vector<StepLedger> ledgers;
  std::vector<std::vector<double>> populations;  // after each control
  double log_prob = 0.0;

  double mean_n(std::size_t step_index) const;
  double var_n(std::size_t step_index) const;
};

/// Samples trajectory `index` of master seed config.seed on populations.
/// Draws exactly one uniform per control, like sample_trajectory, so both
/// paths see the same outcomes. Throws InvariantViolation on truncation
/// leakage above config.leak_tolerance.
CavityTrajectory sample_cavity_trajectory(const CavityModel& model, std::uint64_t index);

/// Same trajectory through the general density-matrix engine.
TrajectoryRecord sample_cavity_full(const CavityModel& model, std::uint64_t index);

/// Per-step ensemble averages (index s is step s+1).
struct CavityStepStats {
  std::vector<std::vector<double>> populations;  // p_n(t), n = 0..cutoff
  std::vector<double> sigma_ctrl_mean, sigma_ctrl_se;
  std::vector<double> sigma_seg_mean, sigma_seg_min;
  std::vector<double> w_ctrl_mean, w_seg_mean, q_ctrl_mean, q_ctrl_se;
  std::vector<double> energy_mean;       // conditional E, averaged
  std::vector<double> entropy_vn_mean;   // conditional S_vN, averaged
  std::vector<double> log_prob_mean;     // accumulated -ln p(r_1..r_t)
  std::vector<double> var_n_mean;
  std::vector<double> var_n_below;       // fraction of trajectories with var(n) < 0.1
  std::vector<double> prep_work_mean;    // atom preparation work, informational
  std::vector<double> feedback_fraction;
};

struct CavityReport {
  CavityConfig config;
  double beta = 0.0;
  double thermal_occupation = 0.0;
  CavityStepStats stats;
  std::vector<double> efficiency;  // eta(t) for t = 0..steps, eta(0) = 0
  CavityTrajectory example;        // trajectory 0
  double max_first_law_residual = 0.0;
  double min_sigma_seg = 0.0;
  double max_truncation_leak = 0.0;
  std::size_t preparation_horizon = 0;
};

/// Ensemble over config.trajectories trajectories on the diagonal fast path.
/// Trajectories are sampled in fixed blocks (in parallel when requested) and
/// reduced serially in index order, so results do not depend on `workers`.
CavityReport run_cavity(const CavityConfig& config, Execution execution = Execution::parallel,
                        int workers = 0);

/// eta(t) = dF(t) / (W_tot(t) + T <-ln p(r_1..r_t)>), eta(0) = 0, and 0
/// whenever the denominator vanishes.
std::vector<double> cavity_efficiency(const CavityStepStats& stats, const CavityModel& model);

/// Steps needed by the loop to walk an empty cavity up to n_t: one
/// feedback-plus-wait cycle of d+1 steps per photon, one to confirm and one
/// for the first delayed estimate to arrive. Steps after it form the
/// stabilized window.
std::size_t preparation_horizon(const CavityConfig& config);

// --- single projective measurement -------------------------------------------

struct ProjectiveReport {
  std::vector<double> probabilities;
  double w_ctrl = 0.0;
  std::vector<double> q_ctrl;
  double w_closed_form = 0.0;
  std::vector<double> q_closed_form;
  double average_q = 0.0;
  double outcome_entropy = 0.0;  // S_Sh[p(r)]
  double state_entropy = 0.0;    // S_Sh(lambda_s) = S_vN(rho0)
  bool entropy_inequality = false;
};

ProjectiveReport run_projective_example(const Matrix& h_system, const DensityOperator& rho0,
                                        std::span<const Vector> basis);

// --- two-point measurement ---------------------------------------------------

struct TpmLeaf {
  std::size_t r0 = 0;
  std::size_t r1 = 0;
  double eps0 = 0.0;
  double eps1 = 0.0;
  double probability = 0.0;
  double w_drive = 0.0;  // W^(1)(r0)
  double w_ctrl = 0.0;   // W^ctrl(r0)
  double q_ctrl = 0.0;   // Q^ctrl(r1, r0)
};

struct TpmReport {
  std::vector<TpmLeaf> leaves;
  double exp_average = 0.0;  // <exp(-beta (eps1 - eps0))>
  double z_ratio = 0.0;      // Z(lambda_1) / Z(lambda_0)
  double max_decomposition_residual = 0.0;
  double engine_max_deviation = 0.0;  // closed forms vs the trajectory engine
  double total_probability = 0.0;
};

/// Exact enumeration of the TPM scheme: Gibbs state of h0, energy
/// measurement, unitary drive ending at h1, energy measurement. Cross-checks
/// every leaf against the trajectory engine. Throws DomainError for a
/// non-unitary drive or mismatched shapes.
TpmReport run_tpm_jarzynski(const Matrix& h0, const Matrix& h1, const Matrix& unitary, double beta);

// --- classical rate-equation limit -------------------------------------------

/// Rates R(s, s') from s' to s with columns summing to zero.
struct RateModel {
  std::vector<double> energies;
  RealMatrix rates;
  double beta = 1.0;

  // Throws DomainError on negative rates, nonzero column sums or a
  // local-detailed-balance violation beyond 1e-10.
  void validate() const;
  std::vector<double> equilibrium() const;
};

enum class ClassicalMode { enumerate, gillespie };

struct ClassicalStep {
  double sigma_operational = 0.0;     // S_Sh(r_n|r_{n-1}) - beta Q
  double sigma_standard = 0.0;        // dS_Sh - beta Q
  double backward_entropy = 0.0;      // S_Sh(r_{n-1}|r_n) via Bayes
  double forward_entropy = 0.0;       // S_Sh(r_n|r_{n-1})
  double heat = 0.0;
  double redefined_sigma = 0.0;       // average with S_ST = -ln p_s(t)
  double sampled_sigma = 0.0;         // Monte Carlo mean of -ln p(r_n|r_{n-1}) - beta Q
  double sampled_sigma_se = 0.0;
};

struct ClassicalReport {
  std::vector<ClassicalStep> steps;
  double max_identity_residual = 0.0;    // |sigma_op - sigma_st - backward|
  double max_redefinition_residual = 0.0;
  double max_sampling_z = 0.0;           // |sampled - exact| / se (gillespie)
  double engine_max_deviation = 0.0;     // quantum engine vs transition matrix
};

/// Perfect repeated measurement of a rate-equation system every dt, starting
/// from `initial` (the equilibrium distribution when empty). Enumerate mode
/// is exact; Gillespie mode additionally samples `trajectories` continuous
/// time paths with first-reaction sampling.
ClassicalReport run_classical_limit(const RateModel& model, std::size_t steps, double dt,
                                    ClassicalMode mode, std::vector<double> initial = {},
                                    std::size_t trajectories = 20000, std::uint64_t seed = 1);

/// Two-level system with energies (0, gap) and relaxation rate gamma.
RateModel two_state_model(double gap, double gamma, double beta);
/// Three-level ladder with neighbour couplings.
RateModel three_state_model(std::array<double, 3> energies, double gamma, double beta);

}  // namespace oqst
