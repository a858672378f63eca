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

#include "oqst/random.hpp"

#include <cmath>

#include "oqst/errors.hpp"

namespace oqst::random {

Matrix ginibre(std::size_t rows, std::size_t cols, Engine& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double re = g(rng);
      const double im = g(rng);
      m(i, j) = Complex(re, im) / std::sqrt(2.0);
    }
  }
  return m;
}

Matrix unitary(std::size_t dim, Engine& rng) {
  // QR of a Ginibre matrix with the phases of R's diagonal divided out.
  const Eigen::MatrixXcd z = ginibre(dim, dim, rng);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < q.cols(); ++i) {
    const Complex d = r(i, i);
    const double a = std::abs(d);
    if (a > 0.0) q.col(i) *= d / a;
  }
  return q;
}

Matrix hermitian(std::size_t dim, Engine& rng) {
  const Matrix g = ginibre(dim, dim, rng);
  return hermitian_part(g);
}

Vector pure_vector(std::size_t dim, Engine& rng) {
  Vector v = ginibre(dim, 1, rng).col(0);
  return v / v.norm();
}

DensityOperator pure_state(std::size_t dim, Engine& rng) {
  return DensityOperator::pure(pure_vector(dim, rng));
}

DensityOperator density(std::size_t dim, Engine& rng, std::size_t rank) {
  if (rank == 0 || rank > dim) rank = dim;
  const Matrix g = ginibre(dim, rank, rng);
  Matrix m = g * g.adjoint();
  m /= m.trace().real();
  return DensityOperator(std::move(m));
}

Instrument instrument(std::size_t dim, const std::vector<std::size_t>& kraus_per_outcome,
                      Engine& rng) {
  std::size_t total = 0;
  for (std::size_t k : kraus_per_outcome) {
    if (k == 0) throw DomainError("random::instrument: empty branch requested");
    total += k;
  }
  const Matrix u = unitary(dim * total, rng);
  const auto d = static_cast<Eigen::Index>(dim);
  std::vector<OutcomeBranch> branches;
  Eigen::Index block = 0;
  for (std::size_t r = 0; r < kraus_per_outcome.size(); ++r) {
    OutcomeBranch b;
    b.label = static_cast<int>(r);
    for (std::size_t a = 0; a < kraus_per_outcome[r]; ++a, ++block) {
      b.kraus.push_back(u.block(block * d, 0, d, d));
    }
    branches.push_back(std::move(b));
  }
  return Instrument(dim, std::move(branches));
}

std::vector<Matrix> sqrt_povm(std::size_t dim, std::size_t outcomes, Engine& rng) {
  // E_n = S^{-1/2} G_n S^{-1/2} with G_n = g g^dag and S = sum G_n.
  std::vector<Matrix> g;
  Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t n = 0; n < outcomes; ++n) {
    const Matrix x = ginibre(dim, dim, rng);
    g.push_back(x * x.adjoint());
    sum += g.back();
  }
  const EigenSystem es = hermitian_eigensystem(sum);
  const Matrix inv_sqrt =
      es.vectors * es.values.cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() *
      es.vectors.adjoint();
  std::vector<Matrix> ops;
  for (const auto& gn : g) {
    const EigenSystem e = hermitian_eigensystem(inv_sqrt * gn * inv_sqrt);
    const RealVector root = e.values.cwiseMax(0.0).cwiseSqrt();
    ops.push_back(e.vectors * root.cast<Complex>().asDiagonal() * e.vectors.adjoint());
  }
  return ops;
}

}  // namespace oqst::random
