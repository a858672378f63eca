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

#include "oqst/channels.hpp"
#include "oqst/errors.hpp"
#include "oqst/random.hpp"
#include "oqst/scenarios.hpp"

using namespace oqst;

namespace {

Vector plus() {
  Vector v(2);
  v << 1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2;
  return v;
}

Instrument z_measurement() { return projective_instrument(computational_basis(2)); }

}  // namespace

TEST_CASE("verify_instrument") {
  const auto ok = verify_instrument(z_measurement());
  CHECK(ok.pass);
  CHECK(ok.max_deviation == 0.0);

  const Instrument z = z_measurement();
  std::vector<OutcomeBranch> scaled;
  for (const auto& b : z.branches()) {
    OutcomeBranch s{b.label, {}};
    for (const auto& k : b.kraus) s.kraus.push_back(1.1 * k);
    scaled.push_back(s);
  }
  CHECK_FALSE(verify_instrument(Instrument(2, scaled)).pass);
  CHECK(verify_instrument(atom_instrument(AtomKind::sensor, 2, 8)).pass);
}

TEST_CASE("apply_instrument") {
  const auto out = apply_instrument(z_measurement(), DensityOperator::pure(plus()));
  REQUIRE(out.size() == 2);
  for (int r = 0; r < 2; ++r) {
    CHECK(out[r].label == r);
    CHECK(out[r].probability == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(max_abs(out[r].state->matrix() - basis_projector(2, r)) < 1e-14);
  }

  random::Engine rng(5);
  const DensityOperator rho = random::density(3, rng);
  const auto same = apply_instrument(identity_instrument(3), rho);
  REQUIRE(same.size() == 1);
  CHECK(same[0].probability == doctest::Approx(1.0));
  CHECK(max_abs(same[0].state->matrix() - rho.matrix()) < 1e-14);

  // Sensor on |2><2| is non-demolition with fair outcomes.
  const auto qnd = apply_instrument(atom_instrument(AtomKind::sensor, 2, 8), DensityOperator::basis_state(9, 2));
  REQUIRE(qnd.size() == 2);
  for (const auto& b : qnd) {
    CHECK(b.probability == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(max_abs(b.state->matrix() - basis_projector(9, 2)) < 1e-12);
  }
}

TEST_CASE("impossible outcomes carry no state") {
  const auto out = apply_instrument(z_measurement(), DensityOperator::basis_state(2, 0));
  CHECK(out[0].possible());
  CHECK_FALSE(out[1].possible());
}

TEST_CASE("average_map") {
  CHECK(max_abs(average_map(z_measurement(), DensityOperator::pure(plus())).matrix() - identity(2) / 2.0) < 1e-14);
  random::Engine rng(6);
  const DensityOperator rho = random::density(3, rng);
  CHECK(max_abs(average_map(identity_instrument(3), rho).matrix() - rho.matrix()) < 1e-14);

  const Instrument instr = random::instrument(3, {2, 1}, rng);
  Matrix sum = Matrix::Zero(3, 3);
  for (const auto& b : apply_instrument(instr, rho)) {
    if (b.possible()) sum += b.probability * b.state->matrix();
  }
  CHECK(max_abs(average_map(instr, rho).matrix() - sum) < 1e-12);
}

TEST_CASE("Stinespring dilation") {
  const StinespringDilation id = stinespring_dilate(identity_instrument(2));
  CHECK(id.unit_dim >= 2);
  CHECK(is_unitary(id.joint_unitary));
  random::Engine rng(7);
  const DensityOperator rho = random::density(2, rng);
  CHECK(max_abs(dilated_branch(id, rho.matrix(), 0) - rho.matrix()) < 1e-12);

  // A random CPTP map as a single-outcome instrument, recovered through the dilation.
  const Instrument channel = random::instrument(3, {3}, rng);
  const StinespringDilation dil = stinespring_dilate(channel);
  CHECK(is_unitary(dil.joint_unitary));
  Matrix proj_sum = Matrix::Zero(static_cast<Eigen::Index>(dil.unit_dim), static_cast<Eigen::Index>(dil.unit_dim));
  for (const auto& [label, p] : dil.projectors) proj_sum += p * p;
  CHECK(max_abs(proj_sum - identity(dil.unit_dim)) < 1e-10);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      Matrix e = Matrix::Zero(3, 3);
      e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
      CHECK(max_abs(dilated_branch(dil, e, 0) - channel.apply_branch(0, e)) < 1e-9);
    }
  }

  std::vector<OutcomeBranch> half{{0, {Matrix(Matrix::Identity(2, 2) * 0.5)}}};
  CHECK_THROWS_AS(stinespring_dilate(Instrument(2, half)), DomainError);
}

TEST_CASE("projective instruments") {
  const Instrument z = z_measurement();
  REQUIRE(z.outcome_count() == 2);
  CHECK(max_abs(z.branches()[0].kraus[0] - basis_projector(2, 0)) == 0.0);
  CHECK(max_abs(z.branches()[1].kraus[0] - basis_projector(2, 1)) == 0.0);

  std::vector<Vector> x{plus(), Vector(2)};
  x[1] << 1.0 / std::numbers::sqrt2, -1.0 / std::numbers::sqrt2;
  const Instrument xm = projective_instrument(x);
  CHECK(max_abs(xm.branches()[0].kraus[0] - projector(x[0])) < 1e-15);
  CHECK(max_abs(xm.branches()[1].kraus[0] - projector(x[1])) < 1e-15);

  const Instrument fock = projective_instrument(computational_basis(9));
  CHECK(fock.outcome_count() == 9);
  CHECK(verify_instrument(fock).pass);

  std::vector<Vector> skew{plus(), plus()};
  CHECK_THROWS_AS(projective_instrument(skew), DomainError);
}

TEST_CASE("dephasing map") {
  random::Engine rng(8);
  const auto basis = computational_basis(3);
  const std::array<double, 3> p{0.2, 0.3, 0.5};
  const DensityOperator diag = DensityOperator::diagonal(p);
  CHECK(max_abs(dephasing_map(basis, diag).matrix() - diag.matrix()) == 0.0);
  CHECK(max_abs(dephasing_map(computational_basis(2), DensityOperator::pure(plus())).matrix() - identity(2) / 2.0) < 1e-15);
  const DensityOperator rho = random::density(3, rng);
  const DensityOperator once = dephasing_map(basis, rho);
  CHECK(max_abs(dephasing_map(basis, once).matrix() - once.matrix()) < 1e-12);
}

TEST_CASE("instrument invariants on random pairs") {
  random::Engine rng(9);
  double worst_norm = 0.0;
  double worst_dil = 0.0;
  double min_purity = 1.0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t d = 2 + static_cast<std::size_t>(k % 3);
    const bool efficient = k % 2 == 0;
    const std::vector<std::size_t> kraus = efficient ? std::vector<std::size_t>{1, 1, 1}
                                                     : std::vector<std::size_t>{2, 1};
    const Instrument instr = random::instrument(d, kraus, rng);
    CHECK(instr.is_efficient() == efficient);
    const DensityOperator rho = efficient ? random::pure_state(d, rng) : random::density(d, rng);
    double total = 0.0;
    const auto dil = stinespring_dilate(instr);
    for (std::size_t i = 0; i < instr.outcome_count(); ++i) {
      const Matrix a = instr.apply_branch(i, rho.matrix());
      total += a.trace().real();
      worst_dil = std::max(worst_dil, max_abs(a - dilated_branch(dil, rho.matrix(), instr.branches()[i].label)));
    }
    worst_norm = std::max(worst_norm, std::abs(total - 1.0));
    if (efficient) {
      for (const auto& b : apply_instrument(instr, rho)) {
        if (b.possible()) min_purity = std::min(min_purity, b.state->purity());
      }
    }
  }
  CHECK(worst_norm <= 1e-10);
  CHECK(worst_dil <= 1e-9);
  CHECK(min_purity >= 1.0 - 1e-9);
}
