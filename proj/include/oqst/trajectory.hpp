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

// Process-tensor engine: free Lindblad segments interleaved with instrument
// applications chosen by a (possibly delayed) feedback policy. Outcomes are
// either sampled from a seeded stream or enumerated exhaustively.
//
// Step n covers the interval (t_{n-1}, t_n]: the free segment, then control
// n. The policy deciding control n sees the conditional system state right
// after control n-d-1 (the initial state when n-d-1 <= 0) and the outcomes
// r_1..r_{n-d-1}.
//
// State tracking: while every instrument is efficient the tracked state is
// the system alone (past units are pure and uncorrelated). The first
// inefficient instrument switches to the joint system+units state, which
// grows by one unit per control up to EngineOptions::max_units.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "oqst/channels.hpp"
#include "oqst/lindblad.hpp"
#include "oqst/thermo.hpp"

namespace oqst {

class ControlOperation {
 public:
  // Dilation is built eagerly, so the instrument must be complete.
  explicit ControlOperation(Instrument instrument, int kind = 0, bool feedback = false,
                            Matrix unit_hamiltonian = Matrix());

  const Instrument& instrument() const { return instrument_; }
  const StinespringDilation& dilation() const { return dilation_; }
  int kind() const { return kind_; }
  bool feedback() const { return feedback_; }
  bool trivial_unit() const { return unit_hamiltonian_.size() == 0; }
  // Zero matrix of the unit dimension when trivial.
  Matrix unit_hamiltonian() const;

 private:
  Instrument instrument_;
  StinespringDilation dilation_;
  int kind_;
  bool feedback_;
  Matrix unit_hamiltonian_;
};

using ControlHandle = std::shared_ptr<const ControlOperation>;

struct ControlDecision {
  ControlHandle control;
  // Protocol for the segment after this control; empty keeps the current one.
  std::optional<Protocol> next_protocol;
};

class ControlSchedule {
 public:
  ControlSchedule(std::vector<double> times, double end_time, double start_time = 0.0);
  static ControlSchedule uniform(std::size_t steps, double period);

  std::span<const double> times() const { return times_; }
  std::size_t size() const { return times_.size(); }
  double start_time() const { return start_; }
  double end_time() const { return end_; }
  ControlSchedule truncated(std::size_t max_steps) const;

 private:
  std::vector<double> times_;
  double end_;
  double start_;
};

struct PolicyInput {
  std::size_t step;                      // 1-based index of the control being decided
  const DensityOperator& estimate;       // conditional system state after control step-d-1
  std::span<const int> known_outcomes;   // r_1 .. r_{step-d-1}
};

struct FeedbackPolicy {
  std::function<ControlDecision(const PolicyInput&)> rule;
  std::size_t delay = 0;
  // After a control flagged `feedback`, the next `cooldown` steps use `idle`.
  std::size_t cooldown = 0;
  std::function<ControlDecision(std::size_t step)> idle;
  // Hamiltonian protocol before the first control; defaults to the
  // generator's Hamiltonian.
  std::optional<Protocol> initial_protocol;
};

/// Open-loop policy: control n is decisions[min(n, size) - 1].
FeedbackPolicy open_loop_policy(std::vector<ControlDecision> decisions);

enum class TrackingMode { automatic, efficient, joint };

struct EngineOptions {
  PropagationMethod method = PropagationMethod::exact;
  std::size_t substeps = 100;
  TrackingMode tracking = TrackingMode::automatic;
  std::size_t max_units = 4;
  bool keep_states = true;
  // Off for driven or non-thermal generators, where sigma_seg may be negative.
  bool enforce_segment_law = true;
};

struct SegmentTail {
  double work = 0.0;
  double heat = 0.0;
  double sigma = 0.0;
  double energy_end = 0.0;
  double entropy_end = 0.0;
};

struct TrajectoryRecord {
  std::vector<int> outcomes;
  std::vector<int> kinds;
  double log_prob = 0.0;  // -ln p(r_1..r_N)
  double initial_energy = 0.0;
  double initial_entropy = 0.0;
  std::vector<StepLedger> ledgers;
  std::vector<DensityOperator> states;  // system state after each control (if kept)
  DensityOperator final_state = DensityOperator::basis_state(1, 0);
  SegmentTail tail;  // free evolution after the last control up to end_time

  double probability() const;
};

TrajectoryRecord sample_trajectory(const ThermalGenerator& gen, const ControlSchedule& schedule,
                                   const FeedbackPolicy& policy, const DensityOperator& rho0,
                                   std::uint64_t seed, const EngineOptions& options = {},
                                   std::uint64_t stream = 0);

/// Runs the process with prescribed outcome labels. Throws DomainError when
/// a prescribed outcome is impossible or unknown.
TrajectoryRecord replay_trajectory(const ThermalGenerator& gen, const ControlSchedule& schedule,
                                   const FeedbackPolicy& policy, const DensityOperator& rho0,
                                   std::span<const int> outcomes, const EngineOptions& options = {});

struct TreeLeaf {
  std::vector<int> outcomes;
  double probability = 0.0;  // product of branch probabilities along the path
  TrajectoryRecord record;
};

inline constexpr std::size_t kMaxTreeLeaves = 1'000'000;

/// Every outcome sequence of the first `max_steps` controls with its exact
/// probability. Throws DomainError past kMaxTreeLeaves leaves.
std::vector<TreeLeaf> enumerate_tree(const ThermalGenerator& gen, const ControlSchedule& schedule,
                                     const FeedbackPolicy& policy, const DensityOperator& rho0,
                                     std::size_t max_steps, const EngineOptions& options = {});

enum class Execution { serial, parallel };

/// Trajectories 0..count-1 of master seed `seed`. The serial path is the
/// reference; the OpenMP path must agree with it bit for bit.
std::vector<TrajectoryRecord> sample_ensemble(const ThermalGenerator& gen,
                                              const ControlSchedule& schedule,
                                              const FeedbackPolicy& policy,
                                              const DensityOperator& rho0, std::uint64_t seed,
                                              std::size_t count, const EngineOptions& options = {},
                                              Execution execution = Execution::parallel,
                                              int workers = 0);

// --- ensemble statistics -----------------------------------------------------

enum class LedgerColumn {
  logp_increment,
  w_seg,
  q_seg,
  w_ctrl,
  q_ctrl,
  sigma_ctrl,
  sigma_seg,
  energy_end,
  entropy_end,
  unit_energy_change,
};
inline constexpr std::size_t kLedgerColumnCount = 10;

double ledger_value(const StepLedger& ledger, LedgerColumn column);

enum class Weighting { equal, probability };

struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> se;  // zero under probability weighting (exact averages)
};

struct EnsembleReport {
  std::size_t steps = 0;
  std::size_t records = 0;
  std::array<ColumnStats, kLedgerColumnCount> columns;
  std::vector<Matrix> averaged_states;  // empty unless every record kept states

  const ColumnStats& column(LedgerColumn c) const { return columns[static_cast<std::size_t>(c)]; }
};

/// Probability weighting uses exp(-log_prob) of each record, normalized.
EnsembleReport ensemble_statistics(std::span<const TrajectoryRecord> records, Weighting weights);

}  // namespace oqst
