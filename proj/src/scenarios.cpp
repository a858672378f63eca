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

#include "oqst/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <utility>

#include <unsupported/Eigen/MatrixFunctions>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "oqst/errors.hpp"
#include "oqst/rng.hpp"

namespace oqst {

// --- cavity atoms ------------------------------------------------------------

const char* atom_kind_name(AtomKind kind) {
  switch (kind) {
    case AtomKind::sensor: return "sensor";
    case AtomKind::emitter: return "emitter";
    case AtomKind::absorber: return "absorber";
  }
  return "unknown";
}

namespace {

void require_cutoff(int target_nt, std::size_t cutoff) {
  if (target_nt < 1) throw DomainError("cavity: target photon number must be positive");
  if (cutoff < static_cast<std::size_t>(target_nt) + 4) {
    throw DomainError("cavity: Fock cutoff must be at least target_nt + 4");
  }
}

double square(double x) { return x * x; }

}  // namespace

AtomTransfer atom_transfer(AtomKind kind, int target_nt, std::size_t cutoff) {
  require_cutoff(target_nt, cutoff);
  const auto d = static_cast<Eigen::Index>(cutoff + 1);
  const double nt = target_nt;
  constexpr double half_pi = std::numbers::pi / 2.0;
  AtomTransfer t;
  t.kind = kind;
  t.weights[0] = RealMatrix::Zero(d, d);
  t.weights[1] = RealMatrix::Zero(d, d);
  for (Eigen::Index n = 0; n < d; ++n) {
    const double x = static_cast<double>(n);
    switch (kind) {
      case AtomKind::sensor: {
        // Ramsey fringe with the phase tuned to be balanced at n_t.
        for (int r = 0; r < 2; ++r) {
          const double phase = std::numbers::pi / 4.0 * (x - nt) + half_pi * (2 * r - 1);
          t.weights[r](n, n) = 0.5 * (1.0 + std::cos(phase));
        }
        break;
      }
      case AtomKind::emitter: {
        // r = 0: the atom left its photon behind, n -> n + 1.
        const double emit = square(std::sin(half_pi * std::sqrt(x + 1.0) / std::sqrt(nt)));
        if (n + 1 < d) {
          t.weights[0](n + 1, n) = emit;
          t.weights[1](n, n) = 1.0 - emit;
        } else {
          // No room above the cutoff; the leak monitor keeps this state empty.
          t.weights[1](n, n) = 1.0;
        }
        break;
      }
      case AtomKind::absorber: {
        // r = 1: the atom took a photon, n -> n - 1.
        const double absorb = square(std::sin(half_pi * std::sqrt(x) / std::sqrt(nt + 1.0)));
        if (n > 0) t.weights[1](n - 1, n) = absorb;
        t.weights[0](n, n) = 1.0 - absorb;
        break;
      }
    }
  }
  return t;
}

Instrument atom_instrument(AtomKind kind, int target_nt, std::size_t cutoff) {
  const AtomTransfer t = atom_transfer(kind, target_nt, cutoff);
  std::vector<OutcomeBranch> branches;
  for (int r = 0; r < 2; ++r) {
    const RealMatrix& w = t.weights[r];
    Matrix k = Matrix::Zero(w.rows(), w.cols());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) k(i, j) = std::sqrt(w(i, j));
    }
    branches.push_back({r, {std::move(k)}});
  }
  return Instrument(cutoff + 1, std::move(branches));
}

AtomKind feedback_decision(std::span<const double> estimate, int target_nt) {
  const auto nt = static_cast<std::size_t>(target_nt);
  if (target_nt < 0 || nt >= estimate.size()) {
    throw DomainError("feedback_decision: target outside the estimate");
  }
  double below = 0.0;
  double above = 0.0;
  for (std::size_t n = 0; n < nt; ++n) below += estimate[n];
  for (std::size_t n = nt + 1; n < estimate.size(); ++n) above += estimate[n];
  const double on = estimate[nt];
  if (above > on) return AtomKind::absorber;
  if (below > on) return AtomKind::emitter;
  return AtomKind::sensor;
}

double atom_preparation_work(AtomKind kind) {
  switch (kind) {
    case AtomKind::sensor: return 0.5;  // pi/2 pulse into an equal superposition
    case AtomKind::emitter: return 1.0;
    case AtomKind::absorber: return 0.0;
  }
  return 0.0;
}

// --- cavity model ------------------------------------------------------------

void CavityConfig::validate() const {
  if (!(omega_c > 0.0)) throw DomainError("cavity: omega_c must be positive");
  if (!(temperature > 0.0)) throw DomainError("cavity: temperature must be positive");
  if (!(lifetime_tc > 0.0)) throw DomainError("cavity: lifetime_tc must be positive");
  if (!(step_ta > 0.0)) throw DomainError("cavity: step_ta must be positive");
  if (!(step_ta < 0.1 * lifetime_tc)) {
    throw DomainError("cavity: step_ta must be much shorter than lifetime_tc");
  }
  require_cutoff(target_nt, cutoff);
  if (steps == 0) throw DomainError("cavity: steps must be positive");
  if (trajectories == 0) throw DomainError("cavity: trajectories must be positive");
  if (!(leak_tolerance > 0.0 && leak_tolerance <= 1.0)) {
    throw DomainError("cavity: leak_tolerance must lie in (0, 1]");
  }
}

namespace {

const CavityConfig& validated(const CavityConfig& c) {
  c.validate();
  return c;
}

std::vector<double> diagonal_of(const DensityOperator& rho) { return rho.populations(); }

FeedbackPolicy cavity_policy(const CavityConfig& c) {
  auto controls = std::make_shared<std::array<ControlHandle, 3>>();
  for (AtomKind k : {AtomKind::sensor, AtomKind::emitter, AtomKind::absorber}) {
    (*controls)[static_cast<std::size_t>(k)] = std::make_shared<const ControlOperation>(
        atom_instrument(k, c.target_nt, c.cutoff), static_cast<int>(k), k != AtomKind::sensor);
  }
  const int nt = c.target_nt;
  FeedbackPolicy policy;
  policy.delay = c.delay;
  policy.cooldown = c.delay;
  policy.rule = [controls, nt](const PolicyInput& in) {
    const std::vector<double> p = in.estimate.populations();
    const AtomKind k = feedback_decision(p, nt);
    return ControlDecision{(*controls)[static_cast<std::size_t>(k)], std::nullopt};
  };
  policy.idle = [controls](std::size_t) {
    return ControlDecision{(*controls)[static_cast<std::size_t>(AtomKind::sensor)], std::nullopt};
  };
  return policy;
}

}  // namespace

CavityModel::CavityModel(const CavityConfig& config)
    : config_(validated(config)),
      generator_(thermal_cavity_generator(
          config.omega_c, config.temperature,
          config.damping == DampingConvention::master_equation ? 2.0 * config.lifetime_tc
                                                               : config.lifetime_tc,
          config.cutoff)),
      n_th_(bose_einstein_occupation(config.omega_c, config.temperature)),
      rho0_(DensityOperator::gibbs(generator_.hamiltonian(), generator_.beta())),
      p0_(diagonal_of(rho0_)),
      free_energy_eq_(-log_partition(generator_.hamiltonian(), generator_.beta()) /
                      generator_.beta()),
      transfers_{atom_transfer(AtomKind::sensor, config.target_nt, config.cutoff),
                 atom_transfer(AtomKind::emitter, config.target_nt, config.cutoff),
                 atom_transfer(AtomKind::absorber, config.target_nt, config.cutoff)},
      population_prop_(generator_, config.step_ta, config.method),
      schedule_(ControlSchedule::uniform(config.steps, config.step_ta)),
      policy_(cavity_policy(config)) {}

const AtomTransfer& CavityModel::transfer(AtomKind kind) const {
  return transfers_[static_cast<std::size_t>(kind)];
}

EngineOptions CavityModel::engine_options() const {
  EngineOptions o;
  o.method = config_.method;
  o.tracking = TrackingMode::efficient;
  o.keep_states = true;
  return o;
}

double CavityTrajectory::mean_n(std::size_t i) const {
  double m = 0.0;
  const auto& p = populations.at(i);
  for (std::size_t n = 0; n < p.size(); ++n) m += static_cast<double>(n) * p[n];
  return m;
}

double CavityTrajectory::var_n(std::size_t i) const {
  const double m = mean_n(i);
  double v = 0.0;
  const auto& p = populations.at(i);
  for (std::size_t n = 0; n < p.size(); ++n) v += square(static_cast<double>(n) - m) * p[n];
  return v;
}

namespace {

// Entropy of a diagonal state with the same eigenvalue clamp as
// von_neumann_entropy, so both paths agree.
double population_entropy(std::span<const double> p) {
  double s = 0.0;
  for (double x : p) {
    if (x >= kEigenClamp) s -= x * std::log(x);
  }
  return s;
}

double population_energy(std::span<const double> p) {
  double e = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) e += static_cast<double>(n) * p[n];
  return e;
}

std::vector<double> apply_weights(const RealMatrix& w, std::span<const double> p) {
  std::vector<double> out(p.size(), 0.0);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < w.cols(); ++j) acc += w(i, j) * p[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

}  // namespace

CavityTrajectory sample_cavity_trajectory(const CavityModel& model, std::uint64_t index) {
  const CavityConfig& c = model.config();
  const double beta = model.beta();
  TrajectoryRng rng(c.seed, index);

  CavityTrajectory out;
  out.outcomes.reserve(c.steps);
  out.kinds.reserve(c.steps);
  out.ledgers.reserve(c.steps);
  out.populations.reserve(c.steps);

  std::vector<double> p(model.initial_populations().begin(), model.initial_populations().end());
  double energy = population_energy(p);
  std::size_t cooldown = 0;

  for (std::size_t n = 1; n <= c.steps; ++n) {
    StepLedger lg;
    lg.step = n;
    lg.time = static_cast<double>(n) * c.step_ta;
    lg.energy_start = energy;
    lg.entropy_start = out.log_prob + population_entropy(p);

    const std::vector<double> pre = model.population_propagator().apply(p);
    lg.energy_pre_ctrl = population_energy(pre);
    lg.q_seg = lg.energy_pre_ctrl - energy;
    lg.entropy_pre_ctrl = out.log_prob + population_entropy(pre);

    AtomKind kind = AtomKind::sensor;
    if (cooldown > 0) {
      --cooldown;
    } else {
      const std::size_t lag = c.delay + 1;
      const std::size_t known = n > lag ? n - lag : 0;
      const std::span<const double> estimate =
          known == 0 ? model.initial_populations() : std::span<const double>(out.populations[known - 1]);
      kind = feedback_decision(estimate, c.target_nt);
    }
    const AtomTransfer& t = model.transfer(kind);
    lg.kind = static_cast<int>(kind);

    std::array<std::vector<double>, 2> branch{apply_weights(t.weights[0], pre),
                                              apply_weights(t.weights[1], pre)};
    std::array<double, 2> prob{};
    double e_avg = 0.0;
    for (int r = 0; r < 2; ++r) {
      double s = 0.0;
      for (double x : branch[r]) s += x;
      prob[r] = std::max(s, 0.0);
      e_avg += population_energy(branch[r]);
    }
    const std::size_t r = select_branch(prob, rng.uniform());

    lg.outcome = static_cast<int>(r);
    lg.logp_increment = -std::log(prob[r]);
    out.log_prob += lg.logp_increment;
    for (double& x : branch[r]) x /= prob[r];
    p = std::move(branch[r]);

    if (p.back() > model.config().leak_tolerance) {
      throw InvariantViolation("cavity: population at the Fock cutoff exceeds leak_tolerance (" +
                               std::to_string(p.back()) + "); raise cutoff");
    }
    energy = population_energy(p);
    lg.energy_end = energy;
    lg.entropy_end = out.log_prob + population_entropy(p);
    lg.w_ctrl_system = e_avg - lg.energy_pre_ctrl;
    lg.q_ctrl_system = energy - e_avg;
    lg = entropy_production_step(lg, beta);

    if (kind != AtomKind::sensor) cooldown = c.delay;

    out.outcomes.push_back(lg.outcome);
    out.kinds.push_back(kind);
    out.ledgers.push_back(lg);
    out.populations.push_back(p);
  }
  return out;
}

TrajectoryRecord sample_cavity_full(const CavityModel& model, std::uint64_t index) {
  return sample_trajectory(model.generator(), model.schedule(), model.policy(),
                           model.initial_state(), model.config().seed, model.engine_options(),
                           index);
}

std::size_t preparation_horizon(const CavityConfig& config) {
  return (static_cast<std::size_t>(config.target_nt) + 2) * (config.delay + 1);
}

namespace {

// Running sums for one step, reduced in trajectory order.
struct StepAccumulator {
  std::vector<double> populations;
  double sigma_ctrl = 0, sigma_ctrl_sq = 0, sigma_seg = 0, sigma_seg_min = 0;
  double w_ctrl = 0, w_seg = 0, q_ctrl = 0, q_ctrl_sq = 0;
  double energy = 0, entropy = 0, log_prob = 0, var_n = 0, var_below = 0, prep = 0, feedback = 0;
  bool first = true;
};

double standard_error(double sum, double sum_sq, double n) {
  if (n < 2.0) return 0.0;
  const double mean = sum / n;
  const double var = std::max(sum_sq / n - mean * mean, 0.0) * n / (n - 1.0);
  return std::sqrt(var / n);
}

}  // namespace

std::vector<double> cavity_efficiency(const CavityStepStats& stats, const CavityModel& model) {
  const double temperature = 1.0 / model.beta();
  const std::size_t steps = stats.energy_mean.size();
  std::vector<double> eta(steps + 1, 0.0);
  double w_tot = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    w_tot += stats.w_ctrl_mean[s] + stats.w_seg_mean[s];
    const double d_free = stats.energy_mean[s] - temperature * stats.entropy_vn_mean[s] -
                          model.equilibrium_free_energy();
    const double cost = w_tot + temperature * stats.log_prob_mean[s];
    eta[s + 1] = cost > 0.0 ? d_free / cost : 0.0;
  }
  return eta;
}

CavityReport run_cavity(const CavityConfig& config, Execution execution, int workers) {
  const CavityModel model(config);
  const std::size_t steps = config.steps;
  const std::size_t total = config.trajectories;
  const std::size_t dim = config.cutoff + 1;

  std::vector<StepAccumulator> acc(steps);
  for (auto& a : acc) a.populations.assign(dim, 0.0);

  CavityReport rep;
  rep.config = config;
  rep.beta = model.beta();
  rep.thermal_occupation = model.thermal_occupation();
  rep.preparation_horizon = preparation_horizon(config);
  rep.min_sigma_seg = 0.0;

  constexpr std::size_t kBlock = 256;
  std::vector<CavityTrajectory> block;
  std::vector<std::exception_ptr> errors;
  bool first_seg = true;
  for (std::size_t begin = 0; begin < total; begin += kBlock) {
    const std::size_t count = std::min(kBlock, total - begin);
    block.assign(count, CavityTrajectory{});
    errors.assign(count, nullptr);
    const auto n = static_cast<std::ptrdiff_t>(count);
    if (execution == Execution::serial) {
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        block[static_cast<std::size_t>(i)] =
            sample_cavity_trajectory(model, begin + static_cast<std::size_t>(i));
      }
    } else {
#ifdef _OPENMP
      const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
#else
      (void)workers;
#endif
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
          block[static_cast<std::size_t>(i)] =
              sample_cavity_trajectory(model, begin + static_cast<std::size_t>(i));
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }

    for (const CavityTrajectory& tr : block) {
      double log_prob = 0.0;
      for (std::size_t s = 0; s < steps; ++s) {
        const StepLedger& lg = tr.ledgers[s];
        StepAccumulator& a = acc[s];
        const auto& p = tr.populations[s];
        for (std::size_t k = 0; k < dim; ++k) a.populations[k] += p[k];
        a.sigma_ctrl += lg.sigma_ctrl;
        a.sigma_ctrl_sq += lg.sigma_ctrl * lg.sigma_ctrl;
        a.sigma_seg += lg.sigma_seg;
        a.sigma_seg_min = a.first ? lg.sigma_seg : std::min(a.sigma_seg_min, lg.sigma_seg);
        a.first = false;
        a.w_ctrl += lg.w_ctrl_system;
        a.w_seg += lg.w_seg;
        a.q_ctrl += lg.q_ctrl_system;
        a.q_ctrl_sq += lg.q_ctrl_system * lg.q_ctrl_system;
        a.energy += lg.energy_end;
        log_prob += lg.logp_increment;
        a.entropy += population_entropy(p);
        a.log_prob += log_prob;
        const double v = tr.var_n(s);
        a.var_n += v;
        a.var_below += v < 0.1 ? 1.0 : 0.0;
        a.prep += atom_preparation_work(tr.kinds[s]);
        a.feedback += tr.kinds[s] != AtomKind::sensor ? 1.0 : 0.0;

        rep.max_first_law_residual =
            std::max(rep.max_first_law_residual, std::abs(lg.first_law_residual()));
        rep.min_sigma_seg = first_seg ? lg.sigma_seg : std::min(rep.min_sigma_seg, lg.sigma_seg);
        first_seg = false;
        rep.max_truncation_leak = std::max(rep.max_truncation_leak, p.back());
      }
    }
    if (begin == 0) rep.example = block.front();
  }

  const double nt = static_cast<double>(total);
  CavityStepStats& st = rep.stats;
  for (std::size_t s = 0; s < steps; ++s) {
    const StepAccumulator& a = acc[s];
    std::vector<double> pops(dim);
    for (std::size_t k = 0; k < dim; ++k) pops[k] = a.populations[k] / nt;
    st.populations.push_back(std::move(pops));
    st.sigma_ctrl_mean.push_back(a.sigma_ctrl / nt);
    st.sigma_ctrl_se.push_back(standard_error(a.sigma_ctrl, a.sigma_ctrl_sq, nt));
    st.sigma_seg_mean.push_back(a.sigma_seg / nt);
    st.sigma_seg_min.push_back(a.sigma_seg_min);
    st.w_ctrl_mean.push_back(a.w_ctrl / nt);
    st.w_seg_mean.push_back(a.w_seg / nt);
    st.q_ctrl_mean.push_back(a.q_ctrl / nt);
    st.q_ctrl_se.push_back(standard_error(a.q_ctrl, a.q_ctrl_sq, nt));
    st.energy_mean.push_back(a.energy / nt);
    st.entropy_vn_mean.push_back(a.entropy / nt);
    st.log_prob_mean.push_back(a.log_prob / nt);
    st.var_n_mean.push_back(a.var_n / nt);
    st.var_n_below.push_back(a.var_below / nt);
    st.prep_work_mean.push_back(a.prep / nt);
    st.feedback_fraction.push_back(a.feedback / nt);
  }
  rep.efficiency = cavity_efficiency(st, model);
  return rep;
}

// --- single projective measurement -------------------------------------------

ProjectiveReport run_projective_example(const Matrix& h_system, const DensityOperator& rho0,
                                        std::span<const Vector> basis) {
  const Instrument instr = projective_instrument(basis);
  if (instr.dim() != rho0.dim() || static_cast<std::size_t>(h_system.rows()) != rho0.dim()) {
    throw DimensionError("run_projective_example: dimensions differ");
  }
  const ControlEnergetics en = control_energetics(instr, h_system, rho0);
  ProjectiveReport rep;
  rep.probabilities = en.probabilities;
  rep.w_ctrl = en.w_ctrl_system;
  rep.average_q = en.average_q_system();

  std::vector<double> diag(basis.size());
  double measured = 0.0;
  for (std::size_t r = 0; r < basis.size(); ++r) {
    diag[r] = basis[r].dot(h_system * basis[r]).real();
    measured += en.probabilities[r] * diag[r];
  }
  rep.w_closed_form = measured - expectation(h_system, rho0.matrix());
  for (std::size_t r = 0; r < basis.size(); ++r) {
    rep.q_ctrl.push_back(en.q_ctrl_system[r].value_or(0.0));
    rep.q_closed_form.push_back(diag[r] - measured);
  }
  rep.outcome_entropy = shannon_entropy(std::span<const double>(en.probabilities));
  rep.state_entropy = von_neumann_entropy(rho0);
  rep.entropy_inequality = rep.outcome_entropy >= rep.state_entropy - 1e-9;
  return rep;
}

// --- two-point measurement ---------------------------------------------------

namespace {

std::vector<Vector> eigen_basis(const EigenSystem& es) {
  std::vector<Vector> out;
  for (Eigen::Index k = 0; k < es.vectors.cols(); ++k) out.emplace_back(es.vectors.col(k));
  return out;
}

}  // namespace

TpmReport run_tpm_jarzynski(const Matrix& h0, const Matrix& h1, const Matrix& unitary, double beta) {
  if (h0.rows() != h0.cols() || h1.rows() != h0.rows() || h1.cols() != h0.cols() ||
      unitary.rows() != h0.rows() || unitary.cols() != h0.cols()) {
    throw DimensionError("run_tpm_jarzynski: operator shapes differ");
  }
  if (hermiticity_defect(h0) > 1e-10 || hermiticity_defect(h1) > 1e-10) {
    throw DomainError("run_tpm_jarzynski: Hamiltonians must be Hermitian");
  }
  if (!is_unitary(unitary, 1e-10)) throw DomainError("run_tpm_jarzynski: drive is not unitary");
  if (!(beta >= 0.0)) throw DomainError("run_tpm_jarzynski: beta must be nonnegative");

  const auto d = static_cast<std::size_t>(h0.rows());
  const EigenSystem e0 = hermitian_eigensystem(h0);
  const EigenSystem e1 = hermitian_eigensystem(h1);
  const double ln_z0 = log_partition(h0, beta);
  const double ln_z1 = log_partition(h1, beta);

  TpmReport rep;
  rep.z_ratio = std::exp(ln_z1 - ln_z0);
  for (std::size_t i = 0; i < d; ++i) {
    const double eps0 = e0.values(static_cast<Eigen::Index>(i));
    const double p0 = std::exp(-beta * eps0 - ln_z0);
    const Vector psi = unitary * e0.vectors.col(static_cast<Eigen::Index>(i));
    const double e_psi = psi.dot(h1 * psi).real();
    std::vector<double> weight(d);
    double e_dephased = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      weight[j] = std::norm(e1.vectors.col(static_cast<Eigen::Index>(j)).dot(psi));
      e_dephased += weight[j] * e1.values(static_cast<Eigen::Index>(j));
    }
    for (std::size_t j = 0; j < d; ++j) {
      TpmLeaf leaf;
      leaf.r0 = i;
      leaf.r1 = j;
      leaf.eps0 = eps0;
      leaf.eps1 = e1.values(static_cast<Eigen::Index>(j));
      leaf.probability = weight[j] * p0;
      leaf.w_drive = e_psi - eps0;
      leaf.w_ctrl = e_dephased - e_psi;
      leaf.q_ctrl = leaf.eps1 - e_dephased;
      rep.exp_average += leaf.probability * std::exp(-beta * (leaf.eps1 - leaf.eps0));
      rep.total_probability += leaf.probability;
      rep.max_decomposition_residual =
          std::max(rep.max_decomposition_residual,
                   std::abs(leaf.eps1 - leaf.eps0 - (leaf.w_drive + leaf.w_ctrl + leaf.q_ctrl)));
      rep.leaves.push_back(leaf);
    }
  }

  // Same scheme through the engine: measure h0, unitary kick followed by a
  // sudden switch to h1, measure h1. No free dynamics in between.
  const ThermalGenerator gen(h0, {}, beta, 0.0);
  const auto b0 = eigen_basis(e0);
  const auto b1 = eigen_basis(e1);
  std::vector<ControlDecision> plan;
  plan.push_back({std::make_shared<const ControlOperation>(projective_instrument(b0), 0), {}});
  plan.push_back({std::make_shared<const ControlOperation>(single_outcome_instrument({unitary}), 1),
                  Protocol::constant(h1)});
  plan.push_back({std::make_shared<const ControlOperation>(projective_instrument(b1), 2), {}});
  const FeedbackPolicy policy = open_loop_policy(std::move(plan));
  const ControlSchedule schedule({0.0, 1.0, 2.0}, 2.0, 0.0);
  EngineOptions opts;
  opts.tracking = TrackingMode::efficient;
  opts.keep_states = false;
  const auto leaves = enumerate_tree(gen, schedule, policy, DensityOperator::gibbs(h0, beta), 3, opts);

  std::map<std::pair<std::size_t, std::size_t>, const TreeLeaf*> by_outcome;
  for (const auto& l : leaves) {
    by_outcome[{static_cast<std::size_t>(l.outcomes[0]), static_cast<std::size_t>(l.outcomes[2])}] = &l;
  }
  double dev = 0.0;
  for (const auto& leaf : rep.leaves) {
    const auto it = by_outcome.find({leaf.r0, leaf.r1});
    if (it == by_outcome.end()) {
      dev = std::max(dev, leaf.probability > 1e-12 ? leaf.probability : 0.0);
      continue;
    }
    const TrajectoryRecord& rec = it->second->record;
    const StepLedger& s2 = rec.ledgers[1];
    const StepLedger& s3 = rec.ledgers[2];
    dev = std::max(dev, std::abs(it->second->probability - leaf.probability));
    dev = std::max(dev, std::abs(s2.w_ctrl_system + s3.w_seg - leaf.w_drive));
    dev = std::max(dev, std::abs(s3.w_ctrl_system - leaf.w_ctrl));
    dev = std::max(dev, std::abs(s3.q_ctrl_system - leaf.q_ctrl));
    dev = std::max(dev, std::abs(s3.energy_end - s2.energy_start -
                                 (leaf.eps1 - leaf.eps0)));
  }
  rep.engine_max_deviation = dev;
  return rep;
}

// --- classical limit ---------------------------------------------------------

void RateModel::validate() const {
  const auto d = static_cast<Eigen::Index>(energies.size());
  if (d == 0 || rates.rows() != d || rates.cols() != d) {
    throw DimensionError("RateModel: rate matrix does not match the energy list");
  }
  if (!(beta > 0.0)) throw DomainError("RateModel: beta must be positive");
  const double scale = std::max(1.0, rates.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < d; ++j) {
    double col = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (i != j && rates(i, j) < 0.0) throw DomainError("RateModel: negative transition rate");
      col += rates(i, j);
    }
    if (std::abs(col) > 1e-10 * scale) throw DomainError("RateModel: columns must sum to zero");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const double fwd = rates(i, j);
      const double bwd = rates(j, i);
      if (fwd == 0.0 && bwd == 0.0) continue;
      const double boltzmann = std::exp(-beta * (energies[i] - energies[j]));
      if (!(fwd > 0.0 && bwd > 0.0) ||
          std::abs(fwd / bwd - boltzmann) > 1e-10 * std::max(1.0, boltzmann)) {
        throw DomainError("RateModel: local detailed balance violated");
      }
    }
  }
}

std::vector<double> RateModel::equilibrium() const {
  const double e_min = *std::min_element(energies.begin(), energies.end());
  std::vector<double> p(energies.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(-beta * (energies[i] - e_min));
    z += p[i];
  }
  for (double& x : p) x /= z;
  return p;
}

RateModel two_state_model(double gap, double gamma, double beta) {
  RateModel m;
  m.energies = {0.0, gap};
  m.beta = beta;
  const double down = gamma;
  const double up = gamma * std::exp(-beta * gap);
  m.rates = RealMatrix(2, 2);
  m.rates << -up, down, up, -down;
  return m;
}

RateModel three_state_model(std::array<double, 3> energies, double gamma, double beta) {
  RateModel m;
  m.energies.assign(energies.begin(), energies.end());
  m.beta = beta;
  m.rates = RealMatrix::Zero(3, 3);
  for (int i = 0; i < 2; ++i) {
    const double de = energies[i + 1] - energies[i];
    m.rates(i + 1, i) = gamma * std::exp(-beta * de / 2.0);
    m.rates(i, i + 1) = gamma * std::exp(beta * de / 2.0);
  }
  for (int j = 0; j < 3; ++j) {
    double out = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (i != j) out += m.rates(i, j);
    }
    m.rates(j, j) = -out;
  }
  return m;
}

namespace {

double entropy_of(std::span<const double> p) {
  double s = 0.0;
  for (double x : p) {
    if (x > 0.0) s -= x * std::log(x);
  }
  return s;
}

// Continuous-time path sampled at multiples of dt with first-reaction
// sampling.
std::vector<std::size_t> gillespie_path(const RateModel& m, std::size_t start, std::size_t steps,
                                        double dt, TrajectoryRng& rng) {
  const auto d = static_cast<std::size_t>(m.energies.size());
  std::vector<std::size_t> path{start};
  std::size_t s = start;
  double t = 0.0;
  const double horizon = static_cast<double>(steps) * dt;
  std::size_t next_sample = 1;
  while (next_sample <= steps) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t target = s;
    for (std::size_t k = 0; k < d; ++k) {
      const double rate = k == s ? 0.0 : m.rates(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(s));
      if (rate <= 0.0) continue;
      const double tau = -std::log1p(-rng.uniform()) / rate;
      if (tau < best) {
        best = tau;
        target = k;
      }
    }
    const double t_jump = t + best;
    while (next_sample <= steps && static_cast<double>(next_sample) * dt <= std::min(t_jump, horizon)) {
      path.push_back(s);
      ++next_sample;
    }
    if (t_jump > horizon) break;
    t = t_jump;
    s = target;
  }
  return path;
}

}  // namespace

ClassicalReport run_classical_limit(const RateModel& model, std::size_t steps, double dt,
                                    ClassicalMode mode, std::vector<double> initial,
                                    std::size_t trajectories, std::uint64_t seed) {
  model.validate();
  if (!(dt > 0.0)) throw DomainError("run_classical_limit: dt must be positive");
  const double max_rate = model.rates.cwiseAbs().maxCoeff();
  if (dt * max_rate > 0.05 + 1e-12) {
    throw DomainError("run_classical_limit: dt * max|R| must not exceed 0.05");
  }
  const std::size_t d = model.energies.size();
  if (initial.empty()) initial = model.equilibrium();
  const ProbabilityVector p_init(initial);
  if (p_init.size() != d) throw DimensionError("run_classical_limit: initial distribution size");

  const Eigen::MatrixXd rdt = dt * model.rates;
  const RealMatrix kernel = rdt.exp();  // kernel(s, s') = p(r_n = s | r_{n-1} = s')
  const double beta = model.beta;
  auto energy = [&](std::size_t s) { return model.energies[s]; };

  ClassicalReport rep;
  std::vector<double> prev(initial);
  for (std::size_t n = 0; n < steps; ++n) {
    std::vector<double> next(d, 0.0);
    for (std::size_t s = 0; s < d; ++s) {
      for (std::size_t q = 0; q < d; ++q) next[s] += kernel(s, q) * prev[q];
    }
    ClassicalStep st;
    for (std::size_t q = 0; q < d; ++q) {
      std::vector<double> col(d);
      for (std::size_t s = 0; s < d; ++s) col[s] = kernel(s, q);
      st.forward_entropy += prev[q] * entropy_of(col);
    }
    for (std::size_t s = 0; s < d; ++s) st.heat += energy(s) * (next[s] - prev[s]);
    st.sigma_operational = st.forward_entropy - beta * st.heat;
    st.sigma_standard = entropy_of(next) - entropy_of(prev) - beta * st.heat;
    for (std::size_t s = 0; s < d; ++s) {
      if (next[s] <= 0.0) continue;
      std::vector<double> back(d);
      for (std::size_t q = 0; q < d; ++q) back[q] = kernel(s, q) * prev[q] / next[s];
      st.backward_entropy += next[s] * entropy_of(back);
    }
    for (std::size_t s = 0; s < d; ++s) {
      for (std::size_t q = 0; q < d; ++q) {
        const double joint = kernel(s, q) * prev[q];
        if (joint <= 0.0) continue;
        st.redefined_sigma +=
            joint * (-std::log(next[s]) + std::log(prev[q]) - beta * (energy(s) - energy(q)));
      }
    }
    rep.max_identity_residual =
        std::max(rep.max_identity_residual,
                 std::abs(st.sigma_operational - st.sigma_standard - st.backward_entropy));
    rep.max_redefinition_residual =
        std::max(rep.max_redefinition_residual, std::abs(st.redefined_sigma - st.sigma_standard));
    rep.steps.push_back(st);
    prev = std::move(next);
  }

  if (mode == ClassicalMode::gillespie) {
    if (trajectories < 2) throw DomainError("run_classical_limit: need at least two trajectories");
    std::vector<double> sum(steps, 0.0), sum_sq(steps, 0.0);
    for (std::size_t i = 0; i < trajectories; ++i) {
      TrajectoryRng rng(seed, i);
      const std::size_t start = select_branch(initial, rng.uniform());
      const auto path = gillespie_path(model, start, steps, dt, rng);
      for (std::size_t n = 0; n < steps; ++n) {
        const std::size_t a = path[n];
        const std::size_t b = path[n + 1];
        const double sigma = -std::log(kernel(b, a)) - beta * (energy(b) - energy(a));
        sum[n] += sigma;
        sum_sq[n] += sigma * sigma;
      }
    }
    const double nt = static_cast<double>(trajectories);
    for (std::size_t n = 0; n < steps; ++n) {
      ClassicalStep& st = rep.steps[n];
      st.sampled_sigma = sum[n] / nt;
      const double var = std::max(sum_sq[n] / nt - st.sampled_sigma * st.sampled_sigma, 0.0);
      st.sampled_sigma_se = std::sqrt(var / (nt - 1.0));
      const double diff = std::abs(st.sampled_sigma - st.sigma_operational);
      const double z = st.sampled_sigma_se > 0.0 ? diff / st.sampled_sigma_se
                                                 : (diff > 1e-12 ? 1e9 : 0.0);
      rep.max_sampling_z = std::max(rep.max_sampling_z, z);
    }
  }

  // Cross-check against the quantum engine: diagonal Hamiltonian, one jump
  // operator per allowed transition, perfect measurement every dt.
  if (steps <= 3 && d <= 4) {
    std::vector<Dissipator> jumps;
    Matrix h = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t s = 0; s < d; ++s) {
      h(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) = energy(s);
      for (std::size_t q = 0; q < d; ++q) {
        const double rate = model.rates(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(q));
        if (s == q || rate <= 0.0) continue;
        Matrix jump = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        jump(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(q)) = 1.0;
        jumps.push_back({std::move(jump), rate});
      }
    }
    const ThermalGenerator gen(h, std::move(jumps), beta, 0.0);
    const auto basis = computational_basis(d);
    const FeedbackPolicy policy = open_loop_policy(
        {{std::make_shared<const ControlOperation>(projective_instrument(basis), 0), {}}});
    EngineOptions opts;
    opts.tracking = TrackingMode::efficient;
    opts.keep_states = false;
    const auto leaves = enumerate_tree(gen, ControlSchedule::uniform(steps, dt), policy,
                                       DensityOperator::diagonal(initial), steps, opts);
    double dev = 0.0;
    for (const auto& leaf : leaves) {
      std::vector<double> first(d, 0.0);
      for (std::size_t s = 0; s < d; ++s) {
        for (std::size_t q = 0; q < d; ++q) first[s] += kernel(s, q) * initial[q];
      }
      double p = first[static_cast<std::size_t>(leaf.outcomes[0])];
      for (std::size_t n = 1; n < leaf.outcomes.size(); ++n) {
        const auto a = static_cast<std::size_t>(leaf.outcomes[n - 1]);
        const auto b = static_cast<std::size_t>(leaf.outcomes[n]);
        p *= kernel(b, a);
        const StepLedger& lg = leaf.record.ledgers[n];
        const double sigma = -std::log(kernel(b, a)) - beta * (energy(b) - energy(a));
        dev = std::max(dev, std::abs(lg.sigma_ctrl + lg.sigma_seg - sigma));
      }
      dev = std::max(dev, std::abs(p - leaf.probability));
    }
    rep.engine_max_deviation = dev;
  }
  return rep;
}

}  // namespace oqst
