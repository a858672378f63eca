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

#include <array>
#include <cmath>
#include <numbers>

#include "oqst/errors.hpp"
#include "oqst/qmath.hpp"
#include "oqst/random.hpp"

using namespace oqst;

namespace {

Vector bell() {
  Vector v = Vector::Zero(4);
  v(0) = v(3) = 1.0 / std::numbers::sqrt2;
  return v;
}

}  // namespace

TEST_CASE("tensor product") {
  CHECK(max_abs(tensor_product(identity(2), identity(2)) - identity(4)) == 0.0);

  const Matrix k = tensor_product(basis_projector(2, 0), basis_projector(2, 1));
  Matrix expect = Matrix::Zero(4, 4);
  expect(1, 1) = 1.0;
  CHECK(max_abs(k - expect) == 0.0);

  random::Engine rng(1);
  const Matrix a = random::ginibre(2, 2, rng);
  const Matrix b = random::ginibre(3, 3, rng);
  const Matrix ab = tensor_product(a, b);
  REQUIRE(ab.rows() == 6);
  CHECK(std::abs(ab.trace() - a.trace() * b.trace()) < 1e-12);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j)
      for (Eigen::Index k2 = 0; k2 < 3; ++k2)
        for (Eigen::Index l = 0; l < 3; ++l) CHECK(ab(i * 3 + k2, j * 3 + l) == a(i, j) * b(k2, l));
}

TEST_CASE("partial trace") {
  random::Engine rng(2);
  const DensityOperator s = random::density(2, rng);
  const DensityOperator u = random::density(3, rng);
  const DensityOperator joint = DensityOperator::assume_valid(tensor_product(s.matrix(), u.matrix()));
  const std::array<std::size_t, 2> dims{2, 3};
  const std::array<std::size_t, 1> keep_s{0};
  const std::array<std::size_t, 1> keep_u{1};
  CHECK(max_abs(partial_trace(joint.matrix(), dims, keep_s) - s.matrix()) < 1e-12);
  CHECK(max_abs(partial_trace(joint.matrix(), dims, keep_u) - u.matrix()) < 1e-12);

  const DensityOperator b = DensityOperator::pure(bell());
  const std::array<std::size_t, 2> qq{2, 2};
  CHECK(max_abs(partial_trace(b.matrix(), qq, keep_s) - identity(2) / 2.0) < 1e-12);
  CHECK(max_abs(partial_trace(b.matrix(), qq, keep_u) - identity(2) / 2.0) < 1e-12);

  // Three factors, keep the outer two.
  const DensityOperator r = random::density(12, rng);
  const std::array<std::size_t, 3> d3{2, 3, 2};
  const std::array<std::size_t, 2> outer{0, 2};
  const Matrix red = partial_trace(r.matrix(), d3, outer);
  CHECK(red.rows() == 4);
  CHECK(std::abs(red.trace() - Complex(1.0)) < 1e-12);

  const std::array<std::size_t, 2> wrong{2, 2};
  CHECK_THROWS_AS(partial_trace(joint.matrix(), wrong, keep_s), DimensionError);
}

TEST_CASE("von Neumann entropy") {
  random::Engine rng(3);
  CHECK(std::abs(von_neumann_entropy(random::pure_state(4, rng))) < 1e-10);
  CHECK(std::abs(von_neumann_entropy(random::pure_state(3, rng))) < 1e-10);
  for (std::size_t d : {2, 3, 5}) {
    CHECK(von_neumann_entropy(DensityOperator::maximally_mixed(d)) ==
          doctest::Approx(std::log(static_cast<double>(d))).epsilon(1e-12));
  }
  const std::array<double, 2> p{2.0 / 3.0, 1.0 / 3.0};
  const double expect = std::log(3.0) - 2.0 / 3.0 * std::log(2.0);
  CHECK(von_neumann_entropy(DensityOperator::diagonal(p)) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(0.63651).epsilon(1e-5));
}

TEST_CASE("Shannon entropy") {
  CHECK(shannon_entropy(std::array<double, 2>{1.0, 0.0}) == 0.0);
  CHECK(shannon_entropy(std::array<double, 2>{0.5, 0.5}) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(shannon_entropy(std::array<double, 2>{0.95, 0.05}) == doctest::Approx(0.19852).epsilon(1e-4));
  CHECK_THROWS_AS(ProbabilityVector({0.5, 0.6}), DomainError);
  CHECK_THROWS_AS(ProbabilityVector({1.2, -0.2}), DomainError);
}

TEST_CASE("mutual information") {
  random::Engine rng(4);
  const std::array<std::size_t, 2> qq{2, 2};
  const std::array<std::size_t, 1> cut{0};
  const DensityOperator prod = DensityOperator::assume_valid(
      tensor_product(random::density(2, rng).matrix(), random::density(2, rng).matrix()));
  CHECK(std::abs(mutual_information(prod, qq, cut)) < 1e-10);
  CHECK(mutual_information(DensityOperator::pure(bell()), qq, cut) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-10));
  const std::array<double, 4> classical{0.5, 0.0, 0.0, 0.5};
  CHECK(mutual_information(DensityOperator::diagonal(classical), qq, cut) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("density operator validation") {
  Matrix bad = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(DensityOperator{bad}, DomainError);  // trace 2
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(DensityOperator{neg}, DomainError);
  Matrix nonherm = Matrix::Identity(2, 2) / 2.0;
  nonherm(0, 1) = 0.3;
  CHECK_THROWS_AS(DensityOperator{nonherm}, DomainError);
  CHECK_NOTHROW(DensityOperator{Matrix(Matrix::Identity(3, 3) / 3.0)});
}

TEST_CASE("Gibbs state and partition function") {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 0.5;
  h(1, 1) = -0.5;
  const double beta = 1.3;
  const DensityOperator g = DensityOperator::gibbs(h, beta);
  const double z = 2.0 * std::cosh(beta / 2.0);
  CHECK(g.matrix()(1, 1).real() == doctest::Approx(std::exp(beta / 2.0) / z).epsilon(1e-12));
  CHECK(log_partition(h, beta) == doctest::Approx(std::log(z)).epsilon(1e-12));
  // Large beta must not overflow.
  CHECK(std::isfinite(log_partition(h * 1e3, 50.0)));
}
