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
#include "oqst/thermo.hpp"

using namespace oqst;

namespace {

Vector plus() {
  Vector v(2);
  v << 1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2;
  return v;
}

Matrix sigma_z_half(double omega) {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = omega / 2.0;
  h(1, 1) = -omega / 2.0;
  return h;
}

}  // namespace

TEST_CASE("control energetics of a z-measurement on |+>") {
  const double omega = 1.7;
  const Instrument z = projective_instrument(computational_basis(2));
  const ControlEnergetics e = control_energetics(z, sigma_z_half(omega), DensityOperator::pure(plus()));
  CHECK(std::abs(e.w_ctrl_system) < 1e-15);
  CHECK(*e.q_ctrl_system[e.index_of(0)] == doctest::Approx(omega / 2.0).epsilon(1e-14));
  CHECK(*e.q_ctrl_system[e.index_of(1)] == doctest::Approx(-omega / 2.0).epsilon(1e-14));
  CHECK(std::abs(e.average_q_system()) < 1e-15);
}

TEST_CASE("identity instrument costs nothing") {
  random::Engine rng(21);
  const Instrument id = identity_instrument(3);
  const Matrix h = random::hermitian(3, rng);
  const DensityOperator rho = random::density(3, rng);
  const ControlEnergetics e = control_energetics(id, h, Matrix::Zero(2, 2), rho, stinespring_dilate(id));
  CHECK(std::abs(e.w_ctrl_system) < 1e-14);
  CHECK(std::abs(e.w_ctrl_unit) < 1e-14);
  CHECK(std::abs(*e.q_ctrl_system[0]) < 1e-14);
  CHECK(std::abs(*e.q_ctrl_unit[0]) < 1e-14);
}

TEST_CASE("control heat averages to zero on random instruments") {
  random::Engine rng(22);
  for (int k = 0; k < 200; ++k) {
    const std::size_t d = 2 + static_cast<std::size_t>(k % 3);
    const Instrument instr = random::instrument(d, {2, 1, 1}, rng);
    const Matrix h = random::hermitian(d, rng);
    const DensityOperator rho = random::density(d, rng);
    const ControlEnergetics e = control_energetics(instr, h, rho);
    CHECK(std::abs(e.average_q_system()) <= 1e-10);
    // dE_S(r) = W + Q(r) per outcome.
    const auto branches = apply_instrument(instr, rho);
    for (std::size_t i = 0; i < branches.size(); ++i) {
      if (!branches[i].possible()) {
        CHECK_FALSE(e.q_ctrl_system[i].has_value());
        continue;
      }
      const double de = expectation(h, branches[i].state->matrix() - rho.matrix());
      CHECK(std::abs(de - e.w_ctrl_system - *e.q_ctrl_system[i]) <= 1e-10);
    }
  }
}

TEST_CASE("unit energetics from the dilation") {
  random::Engine rng(23);
  const Instrument instr = random::instrument(2, {1, 2}, rng);
  const StinespringDilation dil = stinespring_dilate(instr);
  const Matrix hs = random::hermitian(2, rng);
  const Matrix hu = random::hermitian(dil.unit_dim, rng);
  const DensityOperator rho = random::density(2, rng);
  const ControlEnergetics e = control_energetics(instr, hs, hu, rho, dil);
  const ControlEnergetics s_only = control_energetics(instr, hs, rho);
  CHECK(e.w_ctrl_system == doctest::Approx(s_only.w_ctrl_system).epsilon(1e-12));
  // Unit heat averages to zero only when H_U commutes with the unit projectors.
  auto avg_unit_heat = [](const ControlEnergetics& en) {
    double avg = 0.0;
    for (std::size_t i = 0; i < en.probabilities.size(); ++i) avg += en.probabilities[i] * en.q_ctrl_unit[i].value_or(0.0);
    return avg;
  };
  CHECK(std::abs(avg_unit_heat(e)) > 1e-6);
  Matrix hu_diag = Matrix::Zero(hu.rows(), hu.cols());
  for (Eigen::Index i = 0; i < hu.rows(); ++i) hu_diag(i, i) = 0.3 * static_cast<double>(i + 1);
  const ControlEnergetics commuting = control_energetics(instr, hs, hu_diag, rho, dil);
  CHECK(std::abs(avg_unit_heat(commuting)) < 1e-12);
  CHECK(std::abs(e.w_ctrl_unit) > 1e-6);
  CHECK_THROWS_AS(control_energetics(instr, random::hermitian(3, rng), rho), DimensionError);
}

TEST_CASE("stochastic entropy") {
  const Matrix h = sigma_z_half(1.0);
  const DensityOperator th = DensityOperator::gibbs(h, 2.0);
  CHECK(stochastic_entropy(0.0, th) == doctest::Approx(von_neumann_entropy(th)));
  CHECK(stochastic_entropy(std::log(2.0), DensityOperator::basis_state(2, 0)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(stochastic_entropy(0.0, DensityOperator::basis_state(2, 1)) == doctest::Approx(0.0));
  CHECK_THROWS_AS(stochastic_entropy(-0.5, th), DomainError);
}

TEST_CASE("entropy production split") {
  StepLedger l;
  l.entropy_start = 0.2;
  l.entropy_pre_ctrl = 0.5;
  l.entropy_end = 1.1;
  l.q_seg = 0.1;
  l.q_ctrl_system = -0.3;
  const StepLedger out = entropy_production_step(l, 2.0);
  CHECK(out.sigma_seg == doctest::Approx(0.3 - 0.2));
  CHECK(out.sigma_ctrl == doctest::Approx(0.6 + 0.6));

  StepLedger bad = l;
  bad.q_seg = 1.0;  // sigma_seg = 0.3 - 2 < -1e-6
  CHECK_THROWS_AS(entropy_production_step(bad, 2.0), InvariantViolation);
  CHECK_NOTHROW(entropy_production_step(bad, 2.0, false));
}

TEST_CASE("first law residual") {
  StepLedger l;
  l.energy_start = 1.0;
  l.energy_end = 1.5;
  l.unit_energy_change = 0.25;
  l.w_seg = 0.1;
  l.q_seg = 0.2;
  l.w_ctrl_system = 0.3;
  l.w_ctrl_unit = 0.05;
  l.q_ctrl_system = 0.1;
  l.q_ctrl_unit = 0.0;
  CHECK(std::abs(l.first_law_residual()) < 1e-15);
}

TEST_CASE("measurement entropy lemma") {
  random::Engine rng(24);
  for (int k = 0; k < 200; ++k) {
    const std::size_t d = 2 + static_cast<std::size_t>(k % 3);
    const auto ops = random::sqrt_povm(d, 3, rng);
    const LemmaReport r = check_measurement_entropy_lemma(random::density(d, rng), ops);
    CHECK(r.pass);
    CHECK(r.lhs <= r.rhs + 1e-10);
  }
  std::vector<Matrix> bad{Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  CHECK_THROWS_AS(check_measurement_entropy_lemma(DensityOperator::maximally_mixed(2), bad), DomainError);
}
