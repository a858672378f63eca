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

#include "oqst/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <string>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "oqst/errors.hpp"
#include "oqst/rng.hpp"

namespace oqst {

// --- controls and schedules --------------------------------------------------

ControlOperation::ControlOperation(Instrument instrument, int kind, bool feedback,
                                   Matrix unit_hamiltonian)
    : instrument_(std::move(instrument)),
      dilation_(stinespring_dilate(instrument_)),
      kind_(kind),
      feedback_(feedback),
      unit_hamiltonian_(std::move(unit_hamiltonian)) {
  if (!trivial_unit()) {
    const auto du = static_cast<Eigen::Index>(dilation_.unit_dim);
    if (unit_hamiltonian_.rows() != du || unit_hamiltonian_.cols() != du) {
      throw DimensionError("ControlOperation: unit Hamiltonian does not match the unit dimension");
    }
    if (hermiticity_defect(unit_hamiltonian_) > kStateTolerance) {
      throw DomainError("ControlOperation: unit Hamiltonian is not Hermitian");
    }
  }
}

Matrix ControlOperation::unit_hamiltonian() const {
  if (trivial_unit()) {
    const auto du = static_cast<Eigen::Index>(dilation_.unit_dim);
    return Matrix::Zero(du, du);
  }
  return unit_hamiltonian_;
}

ControlSchedule::ControlSchedule(std::vector<double> times, double end_time, double start_time)
    : times_(std::move(times)), end_(end_time), start_(start_time) {
  double prev = start_;
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!(times_[i] > prev) && !(i == 0 && times_[i] == start_)) {
      throw DomainError("ControlSchedule: control times must be strictly increasing");
    }
    prev = times_[i];
  }
  if (!(end_ >= prev)) throw DomainError("ControlSchedule: end time precedes the last control");
}

ControlSchedule ControlSchedule::uniform(std::size_t steps, double period) {
  if (!(period > 0.0)) throw DomainError("ControlSchedule::uniform: period must be positive");
  std::vector<double> t(steps);
  for (std::size_t i = 0; i < steps; ++i) t[i] = static_cast<double>(i + 1) * period;
  return ControlSchedule(std::move(t), static_cast<double>(steps) * period);
}

ControlSchedule ControlSchedule::truncated(std::size_t max_steps) const {
  if (max_steps >= times_.size()) return *this;
  std::vector<double> t(times_.begin(), times_.begin() + static_cast<std::ptrdiff_t>(max_steps));
  const double end = t.empty() ? start_ : t.back();
  return ControlSchedule(std::move(t), end, start_);
}

FeedbackPolicy open_loop_policy(std::vector<ControlDecision> decisions) {
  if (decisions.empty()) throw DomainError("open_loop_policy: no decisions");
  FeedbackPolicy policy;
  auto shared = std::make_shared<const std::vector<ControlDecision>>(std::move(decisions));
  policy.rule = [shared](const PolicyInput& in) {
    const std::size_t i = std::min(in.step, shared->size()) - 1;
    return (*shared)[i];
  };
  return policy;
}

double TrajectoryRecord::probability() const { return std::exp(-log_prob); }

// --- engine ------------------------------------------------------------------

namespace {

// Propagators are expensive to build and every segment of a typical run has
// the same (H, dt), so they are memoized. One cache serves one thread.
class PropagatorCache {
 public:
  PropagatorCache(const ThermalGenerator& gen, PropagationMethod method)
      : gen_(gen), method_(method) {}

  const Propagator& get(const Matrix& h, double dt) {
    for (const auto& e : entries_) {
      if (e.dt == dt && e.h.rows() == h.rows() && e.h == h) return e.prop;
    }
    if (entries_.size() > 512) entries_.clear();
    entries_.push_back({h, dt, Propagator(gen_.with_hamiltonian(h), dt, method_)});
    return entries_.back().prop;
  }

 private:
  struct Entry {
    Matrix h;
    double dt;
    Propagator prop;
  };
  const ThermalGenerator& gen_;
  PropagationMethod method_;
  std::vector<Entry> entries_;
};

// The tracked state. In efficient form rest_dim == 1 and `joint` is the
// system state. In joint form the factor order is system, newest unit, ...,
// oldest unit.
struct Tracked {
  Matrix joint;
  std::size_t system_dim = 0;
  std::vector<std::size_t> unit_dims;  // newest first

  std::size_t rest_dim() const {
    std::size_t r = 1;
    for (auto d : unit_dims) r *= d;
    return r;
  }
  bool is_joint() const { return !unit_dims.empty(); }

  Matrix system() const {
    const std::size_t r = rest_dim();
    if (r == 1) return joint;
    const std::array<std::size_t, 2> dims{system_dim, r};
    const std::array<std::size_t, 1> keep{0};
    return partial_trace(joint, dims, keep);
  }

  double entropy() const { return von_neumann_entropy(joint); }
};

Matrix map_system_blocks(const Propagator& prop, const Matrix& joint, std::size_t,
                         std::size_t r) {
  return prop.apply_to_leading_factor(joint, r);
}

// Outcome of preparing one control: segment done, decision taken, branch
// probabilities known. Committing a branch finishes the step.
struct Pending {
  StepLedger ledger;
  ControlHandle control;
  std::optional<Protocol> next_protocol;
  ControlEnergetics energetics;
  std::vector<double> probabilities;
  std::vector<Matrix> branch_joint;  // unnormalized, per branch
  std::vector<std::size_t> branch_unit_dims;
};

class Runner {
 public:
  Runner(const ThermalGenerator& gen, const ControlSchedule& schedule,
         const FeedbackPolicy& policy, const DensityOperator& rho0, const EngineOptions& options,
         std::shared_ptr<PropagatorCache> cache = nullptr)
      : gen_(&gen),
        schedule_(&schedule),
        policy_(&policy),
        options_(options),
        cache_(cache ? std::move(cache) : std::make_shared<PropagatorCache>(gen, options.method)),
        protocol_(policy.initial_protocol ? *policy.initial_protocol
                                          : Protocol::constant(gen.hamiltonian())) {
    if (rho0.dim() != gen.dim()) {
      throw DimensionError("trajectory: initial state dimension differs from generator");
    }
    if (!policy.rule) throw DomainError("trajectory: feedback policy has no rule");
    if (options.substeps == 0) throw DomainError("trajectory: substeps must be positive");
    tracked_.joint = rho0.matrix();
    tracked_.system_dim = rho0.dim();
    time_ = schedule.start_time();
    h_now_ = protocol_.at(time_);
    estimates_.push_back(rho0);
    record_.initial_energy = expectation(h_now_, rho0.matrix());
    record_.initial_entropy = tracked_.entropy();
    entropy_now_ = record_.initial_entropy;
    if (options.tracking == TrackingMode::joint) force_joint_ = true;
  }

  bool done() const { return record_.ledgers.size() >= schedule_->size(); }
  std::size_t next_step() const { return record_.ledgers.size() + 1; }

  Pending prepare() {
    const std::size_t n = next_step();
    const double t_n = schedule_->times()[n - 1];

    Pending p;
    StepLedger& lg = p.ledger;
    lg.step = n;
    lg.time = t_n;
    lg.energy_start = energy_end_or_initial();
    lg.entropy_start = record_.log_prob + entropy_now_;

    run_segment(t_n, lg.w_seg, lg.q_seg);
    const Matrix sys = tracked_.system();
    lg.energy_pre_ctrl = expectation(h_now_, sys);
    lg.entropy_pre_ctrl = record_.log_prob + tracked_.entropy();

    ControlDecision decision = decide(n);
    if (!decision.control) throw DomainError("trajectory: policy returned no control");
    p.control = decision.control;
    p.next_protocol = std::move(decision.next_protocol);
    const ControlOperation& op = *p.control;
    if (op.instrument().dim() != tracked_.system_dim) {
      throw DimensionError("trajectory: control dimension differs from system dimension");
    }
    lg.kind = op.kind();

    const DensityOperator rho_pre = DensityOperator::assume_valid(sys);
    p.energetics = op.trivial_unit()
                       ? control_energetics(op.instrument(), h_now_, rho_pre)
                       : control_energetics(op.instrument(), h_now_, op.unit_hamiltonian(),
                                            rho_pre, op.dilation());

    const bool joint = force_joint_ || tracked_.is_joint() ||
                       (options_.tracking == TrackingMode::automatic &&
                        !op.instrument().is_efficient());
    if (options_.tracking == TrackingMode::efficient && !op.instrument().is_efficient()) {
      throw DomainError("trajectory: efficient tracking requested for an inefficient instrument");
    }
    if (joint) {
      branch_joint(op, p);
    } else {
      const std::size_t k = op.instrument().outcome_count();
      for (std::size_t i = 0; i < k; ++i) {
        Matrix b = op.instrument().apply_branch(i, tracked_.joint);
        p.probabilities.push_back(std::max(b.trace().real(), 0.0));
        p.branch_joint.push_back(std::move(b));
      }
    }
    return p;
  }

  void commit(Pending& p, std::size_t index) {
    const double prob = p.probabilities.at(index);
    if (prob < kImpossibleOutcome) {
      throw DomainError("trajectory: outcome " +
                        std::to_string(p.control->instrument().branches()[index].label) +
                        " is impossible at step " + std::to_string(p.ledger.step));
    }
    const ControlOperation& op = *p.control;
    StepLedger& lg = p.ledger;
    lg.outcome = op.instrument().branches()[index].label;
    lg.logp_increment = -std::log(prob);
    record_.log_prob += lg.logp_increment;

    Matrix next = std::move(p.branch_joint[index]) / prob;
    next = hermitian_part(next);
    tracked_.joint = std::move(next);
    if (!p.branch_unit_dims.empty() || tracked_.is_joint()) {
      tracked_.unit_dims = p.branch_unit_dims;
      if (!force_joint_) drop_pure_units();
      if (tracked_.unit_dims.size() > options_.max_units) {
        throw DomainError("trajectory: joint tracking exceeds the configured unit cap");
      }
    }

    const Matrix sys = tracked_.system();
    lg.energy_end = expectation(h_now_, sys);
    entropy_now_ = tracked_.entropy();
    lg.entropy_end = record_.log_prob + entropy_now_;
    lg.w_ctrl_system = p.energetics.w_ctrl_system;
    lg.w_ctrl_unit = p.energetics.w_ctrl_unit;
    lg.q_ctrl_system = p.energetics.q_ctrl_system[index].value_or(0.0);
    lg.q_ctrl_unit = p.energetics.q_ctrl_unit[index].value_or(0.0);
    lg.unit_energy_change = lg.w_ctrl_unit + lg.q_ctrl_unit;
    lg = entropy_production_step(lg, gen_->beta(), options_.enforce_segment_law);

    // Sudden switch right after the control; its work is booked at the
    // start of the next segment.
    if (p.next_protocol) {
      protocol_ = std::move(*p.next_protocol);
      pending_switch_ = true;
    }
    if (op.feedback()) cooldown_left_ = policy_->cooldown;

    DensityOperator post = DensityOperator::assume_valid(sys);
    estimates_.push_back(post);
    if (options_.keep_states) record_.states.push_back(post);
    record_.outcomes.push_back(lg.outcome);
    record_.kinds.push_back(lg.kind);
    record_.ledgers.push_back(lg);
  }

  TrajectoryRecord finish() {
    const double s0 = tracked_.entropy();
    double w = 0.0;
    double q = 0.0;
    run_segment(schedule_->end_time(), w, q);
    const Matrix sys = tracked_.system();
    record_.tail.work = w;
    record_.tail.heat = q;
    record_.tail.energy_end = expectation(h_now_, sys);
    record_.tail.entropy_end = record_.log_prob + tracked_.entropy();
    record_.tail.sigma = (tracked_.entropy() - s0) - gen_->beta() * q;
    record_.final_state = DensityOperator::assume_valid(sys);
    return std::move(record_);
  }

 private:
  double energy_end_or_initial() const {
    return record_.ledgers.empty() ? record_.initial_energy : record_.ledgers.back().energy_end;
  }

  ControlDecision decide(std::size_t n) {
    if (cooldown_left_ > 0) {
      --cooldown_left_;
      if (!policy_->idle) throw DomainError("trajectory: cooldown requires an idle control");
      return policy_->idle(n);
    }
    const std::size_t lag = policy_->delay + 1;
    const std::size_t known = n > lag ? n - lag : 0;
    const PolicyInput in{n, estimates_[known],
                         std::span<const int>(record_.outcomes.data(), known)};
    return policy_->rule(in);
  }

  // Free evolution from time_ to t_end under the current protocol.
  void run_segment(double t_end, double& work, double& heat) {
    work = 0.0;
    heat = 0.0;
    const Matrix h_start = protocol_.at(time_);
    if (pending_switch_) {
      work += expectation(h_start - h_now_, tracked_.system());
      pending_switch_ = false;
    }
    h_now_ = h_start;
    const double span = t_end - time_;
    if (span > 0.0) {
      const std::size_t steps = protocol_.is_constant() ? 1 : options_.substeps;
      const double dt = span / static_cast<double>(steps);
      for (std::size_t k = 0; k < steps; ++k) {
        const Matrix before = tracked_.system();
        evolve(cache_->get(h_now_, dt));
        const Matrix after = tracked_.system();
        heat += expectation(h_now_, after - before);
        if (!protocol_.is_constant()) {
          const double t_next =
              (k + 1 == steps) ? t_end : time_ + static_cast<double>(k + 1) * dt;
          const Matrix h_next = protocol_.at(t_next);
          work += expectation(h_next - h_now_, after);
          h_now_ = h_next;
        }
      }
    }
    time_ = t_end;
  }

  void evolve(const Propagator& prop) {
    if (!tracked_.is_joint()) {
      tracked_.joint = prop.apply(DensityOperator::assume_valid(tracked_.joint)).matrix();
      return;
    }
    tracked_.joint = hermitian_part(
        map_system_blocks(prop, tracked_.joint, tracked_.system_dim, tracked_.rest_dim()));
  }

  void branch_joint(const ControlOperation& op, Pending& p) {
    const StinespringDilation& dil = op.dilation();
    const std::size_t ds = tracked_.system_dim;
    const std::size_t du = dil.unit_dim;
    const std::size_t r = tracked_.rest_dim();
    // Insert the fresh unit right after the system.
    const std::size_t big = ds * du * r;
    Matrix grown = Matrix::Zero(static_cast<Eigen::Index>(big), static_cast<Eigen::Index>(big));
    const Matrix& us = dil.unit_state.matrix();
    for (std::size_t s = 0; s < ds; ++s) {
      for (std::size_t t = 0; t < ds; ++t) {
        for (std::size_t a = 0; a < du; ++a) {
          for (std::size_t b = 0; b < du; ++b) {
            const Complex w = us(a, b);
            if (w == Complex(0.0)) continue;
            for (std::size_t u = 0; u < r; ++u) {
              for (std::size_t v = 0; v < r; ++v) {
                grown((s * du + a) * r + u, (t * du + b) * r + v) =
                    w * tracked_.joint(s * r + u, t * r + v);
              }
            }
          }
        }
      }
    }
    const Matrix vfull = tensor_product(dil.joint_unitary, identity(r));
    const Matrix rotated = vfull * grown * vfull.adjoint();
    for (const auto& branch : op.instrument().branches()) {
      const Matrix& proj = dil.projector_for(branch.label);
      Matrix b;
      if (proj.isDiagonal(0.0)) {
        // Diagonal projector: keep the rows and columns it selects.
        Eigen::VectorXd mask(static_cast<Eigen::Index>(big));
        for (std::size_t i = 0; i < big; ++i) {
          mask(static_cast<Eigen::Index>(i)) =
              proj(static_cast<Eigen::Index>((i / r) % du), static_cast<Eigen::Index>((i / r) % du)).real();
        }
        b = mask.asDiagonal() * rotated * mask.asDiagonal();
      } else {
        const Matrix pfull = tensor_product(tensor_product(identity(ds), proj), identity(r));
        b = pfull * rotated * pfull;
      }
      p.probabilities.push_back(std::max(b.trace().real(), 0.0));
      p.branch_joint.push_back(std::move(b));
    }
    p.branch_unit_dims.push_back(du);
    p.branch_unit_dims.insert(p.branch_unit_dims.end(), tracked_.unit_dims.begin(),
                              tracked_.unit_dims.end());
  }

  // A unit whose marginal is pure carries no correlations and no entropy;
  // tracing it out leaves every bookkeeping quantity unchanged.
  void drop_pure_units() {
    std::size_t i = 0;
    while (i < tracked_.unit_dims.size()) {
      std::vector<std::size_t> dims{tracked_.system_dim};
      dims.insert(dims.end(), tracked_.unit_dims.begin(), tracked_.unit_dims.end());
      const std::array<std::size_t, 1> one{i + 1};
      const Matrix marginal = partial_trace(tracked_.joint, dims, one);
      const double purity = (marginal * marginal).trace().real();
      if (purity > 1.0 - 1e-12) {
        std::vector<std::size_t> keep;
        for (std::size_t k = 0; k < dims.size(); ++k) {
          if (k != i + 1) keep.push_back(k);
        }
        tracked_.joint = partial_trace(tracked_.joint, dims, keep);
        tracked_.unit_dims.erase(tracked_.unit_dims.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        ++i;
      }
    }
  }

  const ThermalGenerator* gen_;
  const ControlSchedule* schedule_;
  const FeedbackPolicy* policy_;
  EngineOptions options_;
  std::shared_ptr<PropagatorCache> cache_;

  Protocol protocol_;
  Matrix h_now_;
  bool pending_switch_ = false;
  bool force_joint_ = false;
  double time_ = 0.0;
  double entropy_now_ = 0.0;  // S_vN of tracked_ as last computed
  std::size_t cooldown_left_ = 0;
  Tracked tracked_;
  std::vector<DensityOperator> estimates_;
  TrajectoryRecord record_;
};

}  // namespace

namespace {

TrajectoryRecord sample_with_cache(const ThermalGenerator& gen, const ControlSchedule& schedule,
                                   const FeedbackPolicy& policy, const DensityOperator& rho0,
                                   std::uint64_t seed, const EngineOptions& options,
                                   std::uint64_t stream, std::shared_ptr<PropagatorCache> cache) {
  TrajectoryRng rng(seed, stream);
  Runner runner(gen, schedule, policy, rho0, options, std::move(cache));
  while (!runner.done()) {
    Pending p = runner.prepare();
    const double u = rng.uniform();
    runner.commit(p, select_branch(p.probabilities, u));
  }
  return runner.finish();
}

}  // namespace

TrajectoryRecord sample_trajectory(const ThermalGenerator& gen, const ControlSchedule& schedule,
                                   const FeedbackPolicy& policy, const DensityOperator& rho0,
                                   std::uint64_t seed, const EngineOptions& options,
                                   std::uint64_t stream) {
  return sample_with_cache(gen, schedule, policy, rho0, seed, options, stream, nullptr);
}

TrajectoryRecord replay_trajectory(const ThermalGenerator& gen, const ControlSchedule& schedule,
                                   const FeedbackPolicy& policy, const DensityOperator& rho0,
                                   std::span<const int> outcomes, const EngineOptions& options) {
  if (outcomes.size() != schedule.size()) {
    throw DimensionError("replay_trajectory: outcome count differs from schedule length");
  }
  Runner runner(gen, schedule, policy, rho0, options);
  while (!runner.done()) {
    Pending p = runner.prepare();
    const int want = outcomes[runner.next_step() - 1];
    const auto branches = p.control->instrument().branches();
    std::size_t index = branches.size();
    for (std::size_t i = 0; i < branches.size(); ++i) {
      if (branches[i].label == want) index = i;
    }
    if (index == branches.size()) {
      throw DomainError("replay_trajectory: unknown outcome label " + std::to_string(want));
    }
    runner.commit(p, index);
  }
  return runner.finish();
}

namespace {

void expand(const Runner& node, double probability, std::vector<TreeLeaf>& leaves) {
  if (node.done()) {
    Runner copy = node;
    TreeLeaf leaf;
    leaf.probability = probability;
    leaf.record = copy.finish();
    leaf.outcomes = leaf.record.outcomes;
    leaves.push_back(std::move(leaf));
    return;
  }
  Runner base = node;
  Pending p = base.prepare();
  for (std::size_t i = 0; i < p.probabilities.size(); ++i) {
    if (p.probabilities[i] < kImpossibleOutcome) continue;
    if (leaves.size() >= kMaxTreeLeaves) {
      throw DomainError("enumerate_tree: more than 1e6 leaves");
    }
    Runner child = base;
    Pending branch = p;
    child.commit(branch, i);
    expand(child, probability * p.probabilities[i], leaves);
  }
}

}  // namespace

std::vector<TreeLeaf> enumerate_tree(const ThermalGenerator& gen, const ControlSchedule& schedule,
                                     const FeedbackPolicy& policy, const DensityOperator& rho0,
                                     std::size_t max_steps, const EngineOptions& options) {
  const ControlSchedule cut = schedule.truncated(max_steps);
  std::vector<TreeLeaf> leaves;
  Runner root(gen, cut, policy, rho0, options);
  expand(root, 1.0, leaves);
  return leaves;
}

std::vector<TrajectoryRecord> sample_ensemble(const ThermalGenerator& gen,
                                              const ControlSchedule& schedule,
                                              const FeedbackPolicy& policy,
                                              const DensityOperator& rho0, std::uint64_t seed,
                                              std::size_t count, const EngineOptions& options,
                                              Execution execution, int workers) {
  std::vector<TrajectoryRecord> out(count);
  if (execution == Execution::serial) {
    auto cache = std::make_shared<PropagatorCache>(gen, options.method);
    for (std::size_t i = 0; i < count; ++i) {
      out[i] = sample_with_cache(gen, schedule, policy, rho0, seed, options, i, cache);
    }
    return out;
  }
  // The first failing index is rethrown so errors do not depend on thread timing.
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#ifdef _OPENMP
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel num_threads(threads)
#else
  (void)workers;
#endif
  {
    auto cache = std::make_shared<PropagatorCache>(gen, options.method);
#ifdef _OPENMP
#pragma omp for schedule(dynamic)
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        out[static_cast<std::size_t>(i)] = sample_with_cache(
            gen, schedule, policy, rho0, seed, options, static_cast<std::uint64_t>(i), cache);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

// --- ensemble statistics -----------------------------------------------------

double ledger_value(const StepLedger& l, LedgerColumn column) {
  switch (column) {
    case LedgerColumn::logp_increment: return l.logp_increment;
    case LedgerColumn::w_seg: return l.w_seg;
    case LedgerColumn::q_seg: return l.q_seg;
    case LedgerColumn::w_ctrl: return l.w_ctrl_system + l.w_ctrl_unit;
    case LedgerColumn::q_ctrl: return l.q_ctrl_system;
    case LedgerColumn::sigma_ctrl: return l.sigma_ctrl;
    case LedgerColumn::sigma_seg: return l.sigma_seg;
    case LedgerColumn::energy_end: return l.energy_end;
    case LedgerColumn::entropy_end: return l.entropy_end;
    case LedgerColumn::unit_energy_change: return l.unit_energy_change;
  }
  return 0.0;
}

EnsembleReport ensemble_statistics(std::span<const TrajectoryRecord> records, Weighting weights) {
  if (records.empty()) throw DomainError("ensemble_statistics: no records");
  EnsembleReport rep;
  rep.steps = records.front().ledgers.size();
  rep.records = records.size();
  for (const auto& r : records) {
    if (r.ledgers.size() != rep.steps) {
      throw DimensionError("ensemble_statistics: records have different step counts");
    }
  }

  std::vector<double> w(records.size(), 1.0 / static_cast<double>(records.size()));
  if (weights == Weighting::probability) {
    double total = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      w[i] = records[i].probability();
      total += w[i];
    }
    if (!(total > 0.0)) throw DomainError("ensemble_statistics: zero total probability");
    for (auto& x : w) x /= total;
  }

  const double n = static_cast<double>(records.size());
  for (std::size_t c = 0; c < kLedgerColumnCount; ++c) {
    auto& col = rep.columns[c];
    col.mean.assign(rep.steps, 0.0);
    col.se.assign(rep.steps, 0.0);
    for (std::size_t s = 0; s < rep.steps; ++s) {
      double mean = 0.0;
      for (std::size_t i = 0; i < records.size(); ++i) {
        mean += w[i] * ledger_value(records[i].ledgers[s], static_cast<LedgerColumn>(c));
      }
      col.mean[s] = mean;
      if (weights == Weighting::equal && records.size() > 1) {
        double ss = 0.0;
        for (const auto& r : records) {
          const double d = ledger_value(r.ledgers[s], static_cast<LedgerColumn>(c)) - mean;
          ss += d * d;
        }
        col.se[s] = std::sqrt(ss / (n - 1.0) / n);
      }
    }
  }

  const bool have_states = std::all_of(records.begin(), records.end(), [&](const auto& r) {
    return r.states.size() == rep.steps;
  });
  if (have_states && rep.steps > 0) {
    const auto d = static_cast<Eigen::Index>(records.front().states.front().dim());
    rep.averaged_states.assign(rep.steps, Matrix::Zero(d, d));
    for (std::size_t i = 0; i < records.size(); ++i) {
      for (std::size_t s = 0; s < rep.steps; ++s) {
        rep.averaged_states[s] += w[i] * records[i].states[s].matrix();
      }
    }
  }
  return rep;
}

}  // namespace oqst
