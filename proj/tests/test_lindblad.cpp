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
#include "oqst/lindblad.hpp"
#include "oqst/random.hpp"

using namespace oqst;

namespace {

constexpr double kOmega = 2.0 * std::numbers::pi * 51.1e9;
constexpr double kTc = 65e-3;
constexpr double kTa = 82e-6;

ThermalGenerator cavity(std::size_t cutoff = 8) { return thermal_cavity_generator(kOmega, 0.8, kTc, cutoff); }

}  // namespace

TEST_CASE("thermal occupation of the cavity") {
  const double n = bose_einstein_occupation(kOmega, 0.8);
  CHECK(n == doctest::Approx(0.049).epsilon(0.01));
  CHECK(n == doctest::Approx(1.0 / std::expm1(dimensionless_beta(kOmega, 0.8))).epsilon(1e-14));
  CHECK(dimensionless_beta(kOmega, 0.8) == doctest::Approx(3.0655).epsilon(1e-4));
  CHECK_THROWS_AS(bose_einstein_occupation(kOmega, 0.0), DomainError);
  CHECK_THROWS_AS(thermal_cavity_generator(kOmega, 0.8, -1.0, 8), DomainError);
}

TEST_CASE("cavity generator structure") {
  const ThermalGenerator g = cavity();
  CHECK(g.dim() == 9);
  CHECK(g.coherent_scale() == 0.0);
  const double n = bose_einstein_occupation(kOmega, 0.8);
  REQUIRE(g.dissipators().size() == 2);
  CHECK(g.dissipators()[0].rate == doctest::Approx((1.0 + n) / kTc).epsilon(1e-14));
  CHECK(g.dissipators()[1].rate == doctest::Approx(n / kTc).epsilon(1e-14));

  // Gibbs state is stationary.
  const DensityOperator th = DensityOperator::gibbs(g.hamiltonian(), g.beta());
  CHECK(max_abs(g.apply(th.matrix())) <= 1e-8);

  // |1><1| decays into |0><0| at rate (1+N)/T_c.
  const Matrix d = g.apply(basis_projector(9, 1));
  CHECK(d(0, 0).real() == doctest::Approx((1.0 + n) / kTc).epsilon(1e-12));

  // Rate matrix: columns sum to zero, detailed balance.
  const RealMatrix r = g.population_rates();
  for (Eigen::Index c = 0; c < r.cols(); ++c) CHECK(std::abs(r.col(c).sum()) < 1e-9);
  for (Eigen::Index m = 0; m + 1 < r.rows(); ++m) {
    CHECK(r(m + 1, m) / r(m, m + 1) == doctest::Approx(std::exp(-g.beta())).epsilon(1e-10));
  }
}

TEST_CASE("thermal qubit generator") {
  const ThermalGenerator q = thermal_qubit_generator(1.0, 0.7, 0.3);
  const DensityOperator th = DensityOperator::gibbs(q.hamiltonian(), q.beta());
  CHECK(max_abs(q.apply(th.matrix())) < 1e-14);
  // Superoperator agrees with the direct action.
  random::Engine rng(11);
  const DensityOperator rho = random::density(2, rng);
  const Matrix l = q.superoperator();
  Vector v(4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) v(i * 2 + j) = rho.matrix()(i, j);
  const Vector out = l * v;
  const Matrix direct = q.apply(rho.matrix());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(out(i * 2 + j) - direct(i, j)) < 1e-13);
}

TEST_CASE("propagate") {
  const ThermalGenerator g = cavity();
  random::Engine rng(12);
  const DensityOperator rho = random::density(9, rng);
  CHECK(max_abs(propagate(g, rho, 0.0, PropagationMethod::exact).matrix() - rho.matrix()) == 0.0);
  CHECK_THROWS_AS(propagate(g, rho, -1.0, PropagationMethod::exact), DomainError);

  const DensityOperator later = propagate(g, rho, 1e-3, PropagationMethod::exact);
  CHECK(std::abs(later.matrix().trace() - Complex(1.0)) < 1e-12);

  // Long times relax to the Gibbs state.
  const DensityOperator th = DensityOperator::gibbs(g.hamiltonian(), g.beta());
  CHECK(max_abs(propagate(g, rho, 100.0 * kTc, PropagationMethod::exact).matrix() - th.matrix()) < 1e-8);
}

TEST_CASE("first-order propagation error") {
  // Second-order Taylor term dominates the gap: 0.5 (L dt)^2 rho.
  const ThermalGenerator g = cavity();
  const DensityOperator fock2 = DensityOperator::basis_state(9, 2);
  const Matrix gap = propagate(g, fock2, kTa, PropagationMethod::exact).matrix() -
                     propagate(g, fock2, kTa, PropagationMethod::first_order).matrix();
  const Matrix second = 0.5 * kTa * kTa * g.apply(g.apply(fock2.matrix()));
  CHECK(max_abs(gap - second) < 1e-8);
  CHECK(max_abs(gap) == doctest::Approx(5.654e-6).epsilon(1e-3));

  // Damping coefficients halved (the cavity model's default) meet (Ta/Tc)^2.
  const ThermalGenerator half = thermal_cavity_generator(kOmega, 0.8, 2.0 * kTc, 8);
  const double gap_half = max_abs(propagate(half, fock2, kTa, PropagationMethod::exact).matrix() -
                                  propagate(half, fock2, kTa, PropagationMethod::first_order).matrix());
  CHECK(gap_half <= (kTa / kTc) * (kTa / kTc));
}

TEST_CASE("population propagator matches the full map on diagonal states") {
  const ThermalGenerator g = cavity();
  const std::vector<double> p{0.1, 0.2, 0.3, 0.2, 0.1, 0.05, 0.03, 0.02, 0.0};
  for (auto method : {PropagationMethod::exact, PropagationMethod::first_order}) {
    const PopulationPropagator pp(g, kTa, method);
    const auto q = pp.apply(p);
    const auto full = propagate(g, DensityOperator::diagonal(p), kTa, method).populations();
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(q[i] == doctest::Approx(full[i]).epsilon(1e-12));
  }
  Matrix h = Matrix::Zero(2, 2);
  h(0, 1) = h(1, 0) = 1.0;
  CHECK_THROWS_AS(ThermalGenerator(h, {}, 1.0).population_rates(), DomainError);
}

TEST_CASE("heat and work along a segment") {
  const ThermalGenerator g = cavity();
  random::Engine rng(13);
  const DensityOperator rho = random::density(9, rng);
  const SegmentResult s = heat_work_segment(g, Protocol::constant(g.hamiltonian()), rho, 0.0, 5e-3);
  CHECK(s.work == 0.0);
  CHECK(s.heat == doctest::Approx(expectation(g.hamiltonian(), s.rho_end.matrix() - rho.matrix())).epsilon(1e-12));

  const DensityOperator th = DensityOperator::gibbs(g.hamiltonian(), g.beta());
  CHECK(std::abs(heat_work_segment(g, Protocol::constant(g.hamiltonian()), th, 0.0, 1e-2).heat) < 1e-10);

  // Driven qubit: first law closes to round-off with left-endpoint sums.
  const ThermalGenerator q = thermal_qubit_generator(1.0, 1.0, 0.5);
  Matrix sx = Matrix::Zero(2, 2);
  sx(0, 1) = sx(1, 0) = 1.0;
  const Matrix h0 = q.hamiltonian();
  const Protocol drive = Protocol::continuous([h0, sx](double t) { return Matrix(h0 + 0.4 * t * sx); });
  const DensityOperator r0 = random::density(2, rng);
  const SegmentResult d = heat_work_segment(q, drive, r0, 0.0, 1.0, 50);
  const double de = expectation(drive.at(1.0), d.rho_end.matrix()) - expectation(drive.at(0.0), r0.matrix());
  CHECK(std::abs(de - d.work - d.heat) < 1e-12);
  CHECK(d.work != 0.0);
}

TEST_CASE("protocols") {
  Matrix a = Matrix::Zero(1, 1);
  Matrix b = Matrix::Ones(1, 1);
  const Protocol p = Protocol::piecewise({{0.0, a}, {1.0, b}});
  CHECK(p.at(-1.0)(0, 0) == Complex(0.0));
  CHECK(p.at(0.5)(0, 0) == Complex(0.0));
  CHECK(p.at(1.0)(0, 0) == Complex(1.0));
  CHECK_FALSE(p.is_constant());
  CHECK(Protocol::constant(a).is_constant());
}
