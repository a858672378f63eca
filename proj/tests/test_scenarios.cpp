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

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oqst/errors.hpp"
#include "oqst/random.hpp"
#include "oqst/scenarios.hpp"

using namespace oqst;

TEST_CASE("sensor, emitter and absorber weights") {
  const AtomTransfer s = atom_transfer(AtomKind::sensor, 2, 8);
  CHECK(s.weights[1](0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(s.weights[0](0, 0)) < 1e-14);
  CHECK(s.weights[0](2, 2) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s.weights[1](2, 2) == doctest::Approx(0.5).epsilon(1e-14));

  const AtomTransfer e = atom_transfer(AtomKind::emitter, 2, 8);
  CHECK(e.weights[0](2, 1) == doctest::Approx(1.0).epsilon(1e-14));
  const AtomTransfer a = atom_transfer(AtomKind::absorber, 2, 8);
  CHECK(a.weights[1](2, 3) == doctest::Approx(1.0).epsilon(1e-14));

  for (const AtomTransfer* t : {&s, &e, &a}) {
    const RealMatrix total = t->weights[0] + t->weights[1];
    for (Eigen::Index n = 0; n < total.cols(); ++n) CHECK(std::abs(total.col(n).sum() - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(atom_transfer(AtomKind::sensor, 2, 5), DomainError);
  for (AtomKind k : {AtomKind::sensor, AtomKind::emitter, AtomKind::absorber}) {
    CHECK(verify_instrument(atom_instrument(k, 2, 8)).pass);
    CHECK(atom_instrument(k, 2, 8).is_efficient());
  }
}

TEST_CASE("feedback law") {
  std::vector<double> p(9, 0.0);
  p[1] = 1.0;
  CHECK(feedback_decision(p, 2) == AtomKind::emitter);
  p[1] = 0.0;
  p[3] = 1.0;
  CHECK(feedback_decision(p, 2) == AtomKind::absorber);
  p[3] = 0.0;
  p[2] = 1.0;
  CHECK(feedback_decision(p, 2) == AtomKind::sensor);
  // Ties keep measuring.
  std::fill(p.begin(), p.end(), 0.0);
  p[2] = 0.5;
  p[3] = 0.5;
  CHECK(feedback_decision(p, 2) == AtomKind::sensor);
}

TEST_CASE("cavity config validation") {
  CavityConfig c;
  CHECK_NOTHROW(c.validate());
  c.cutoff = 5;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = CavityConfig{};
  c.step_ta = c.lifetime_tc;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = CavityConfig{};
  c.temperature = -1.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = CavityConfig{};
  c.leak_tolerance = 0.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("cavity model") {
  const CavityModel m{CavityConfig{}};
  CHECK(m.thermal_occupation() == doctest::Approx(0.04891).epsilon(1e-3));
  CHECK(m.beta() == doctest::Approx(3.0655).epsilon(1e-4));
  CHECK(preparation_horizon(CavityConfig{}) == 24);
  double total = 0.0;
  for (double x : m.initial_populations()) total += x;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("cavity trajectory: fast path agrees with the engine") {
  CavityConfig c;
  c.steps = 50;
  const CavityModel m(c);
  for (std::uint64_t i = 0; i < 5; ++i) {
    const CavityTrajectory fast = sample_cavity_trajectory(m, i);
    const TrajectoryRecord full = sample_cavity_full(m, i);
    CHECK(fast.outcomes == full.outcomes);
    for (std::size_t s = 0; s < fast.ledgers.size(); ++s) {
      CHECK(std::abs(fast.ledgers[s].sigma_ctrl - full.ledgers[s].sigma_ctrl) <= 1e-9);
      CHECK(std::abs(fast.ledgers[s].q_ctrl_system - full.ledgers[s].q_ctrl_system) <= 1e-9);
      CHECK(std::abs(fast.ledgers[s].first_law_residual()) <= 1e-10);
    }
  }
}

TEST_CASE("cavity ensemble") {
  CavityConfig c;
  c.steps = 100;
  c.trajectories = 400;
  const CavityReport r = run_cavity(c);
  CHECK(r.efficiency.size() == 101);
  CHECK(r.efficiency[0] == 0.0);
  for (double e : r.efficiency) {
    CHECK(e >= 0.0);
    CHECK(e <= 1.0 + 1e-9);
  }
  CHECK(r.max_first_law_residual <= 1e-10);
  CHECK(r.min_sigma_seg >= -1e-10);
  const CavityReport serial = run_cavity(c, Execution::serial);
  CHECK(serial.efficiency == r.efficiency);
  CHECK(serial.stats.populations == r.stats.populations);
}

TEST_CASE("projective example") {
  Vector plus(2);
  plus << 1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2;
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 0.5;
  h(1, 1) = -0.5;
  const auto basis = computational_basis(2);
  const ProjectiveReport r = run_projective_example(h, DensityOperator::pure(plus), basis);
  CHECK(std::abs(r.w_ctrl) < 1e-15);
  CHECK(r.q_ctrl[0] == doctest::Approx(0.5));
  CHECK(r.q_ctrl[1] == doctest::Approx(-0.5));
  CHECK(r.entropy_inequality);

  // Eigenbasis of rho: no work and equal entropies.
  const std::array<double, 2> lam{0.7, 0.3};
  const ProjectiveReport e = run_projective_example(h, DensityOperator::diagonal(lam), basis);
  CHECK(std::abs(e.w_ctrl) < 1e-15);
  CHECK(e.outcome_entropy == doctest::Approx(e.state_entropy).epsilon(1e-12));

  random::Engine rng(41);
  const ProjectiveReport m = run_projective_example(random::hermitian(3, rng), DensityOperator::maximally_mixed(3),
                                                    computational_basis(3));
  CHECK(std::abs(m.w_ctrl) < 1e-12);
  for (double p : m.probabilities) CHECK(p == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("two-point measurement") {
  Matrix h0 = Matrix::Zero(2, 2);
  h0(0, 0) = 0.5;
  h0(1, 1) = -0.5;
  const TpmReport same = run_tpm_jarzynski(h0, h0, identity(2), 0.8);
  CHECK(same.exp_average == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& l : same.leaves) {
    if (l.probability > 0.0) CHECK(l.eps1 == doctest::Approx(l.eps0));
  }

  const Matrix h1 = 2.0 * h0;
  Matrix hadamard(2, 2);
  hadamard << 1.0, 1.0, 1.0, -1.0;
  hadamard /= std::numbers::sqrt2;
  const TpmReport r = run_tpm_jarzynski(h0, h1, hadamard, 1.0);
  CHECK(r.z_ratio == doctest::Approx(std::cosh(1.0) / std::cosh(0.5)).epsilon(1e-12));
  CHECK(std::abs(r.exp_average - r.z_ratio) <= 1e-10);
  CHECK(r.total_probability == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.engine_max_deviation <= 1e-9);
  for (const auto& l : r.leaves) {
    CHECK(std::abs(l.eps1 - l.eps0 - l.w_drive - l.w_ctrl - l.q_ctrl) <= 1e-10);
  }
  CHECK_THROWS_AS(run_tpm_jarzynski(h0, h1, Matrix(2.0 * identity(2)), 1.0), DomainError);
}

TEST_CASE("classical limit") {
  const RateModel two = two_state_model(1.0, 1.0, 1.0);
  CHECK_NOTHROW(two.validate());
  const ClassicalReport r = run_classical_limit(two, 4, 0.02 / (1.0 + std::exp(-1.0)), ClassicalMode::enumerate, {0.3, 0.7});
  CHECK(r.max_identity_residual <= 1e-8);
  CHECK(r.max_redefinition_residual <= 1e-8);

  const ClassicalReport eq = run_classical_limit(two, 3, 0.01, ClassicalMode::enumerate);
  for (const auto& s : eq.steps) {
    CHECK(std::abs(s.sigma_standard) <= 1e-12);
    CHECK(s.sigma_operational > 0.0);
    CHECK(s.sigma_operational == doctest::Approx(s.forward_entropy).epsilon(1e-10));
  }

  const RateModel frozen = two_state_model(1.0, 0.0, 1.0);
  const ClassicalReport f = run_classical_limit(frozen, 2, 0.01, ClassicalMode::enumerate, {0.4, 0.6});
  for (const auto& s : f.steps) {
    CHECK(std::abs(s.sigma_standard) <= 1e-14);
    CHECK(std::abs(s.sigma_operational) <= 1e-14);
  }

  RateModel broken = two;
  broken.rates(0, 1) *= 2.0;
  broken.rates(1, 1) = -broken.rates(0, 1);
  CHECK_THROWS_AS(broken.validate(), DomainError);
  CHECK_THROWS_AS(run_classical_limit(two, 2, 1.0, ClassicalMode::enumerate), DomainError);
}
