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

// Dense complex linear algebra on small Hilbert spaces and the entropy
// functionals built on it. Dimensions stay below ~64 everywhere, so every
// operator is a row-major dense matrix.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace oqst {

using Complex = std::complex<double>;
using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kStateTolerance = 1e-10;
inline constexpr double kEigenClamp = 1e-12;

Matrix identity(std::size_t dim);
Matrix projector(const Vector& v);
Matrix basis_projector(std::size_t dim, std::size_t index);

double max_abs(const Matrix& m);
double hermiticity_defect(const Matrix& m);
bool is_unitary(const Matrix& u, double tol = 1e-10);
Matrix hermitian_part(const Matrix& m);

// Re tr{op * rho}; callers pass Hermitian operators.
double expectation(const Matrix& op, const Matrix& rho);

/// Finite-dimensional quantum state: Hermitian, unit trace, positive
/// semidefinite. The checked constructor enforces all three within
/// kStateTolerance; `assume_valid` only symmetrizes and is meant for
/// states produced by maps already known to preserve validity.
class DensityOperator {
 public:
  explicit DensityOperator(Matrix m, double tol = kStateTolerance);

  static DensityOperator assume_valid(Matrix m);
  static DensityOperator pure(const Vector& psi);
  static DensityOperator basis_state(std::size_t dim, std::size_t index);
  static DensityOperator maximally_mixed(std::size_t dim);
  static DensityOperator diagonal(std::span<const double> populations);
  static DensityOperator gibbs(const Matrix& hamiltonian, double beta);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double purity() const;
  std::vector<double> populations() const;

 private:
  struct Unchecked {};
  DensityOperator(Matrix m, Unchecked);
  Matrix m_;
};

/// Nonnegative reals summing to one within 1e-12.
class ProbabilityVector {
 public:
  explicit ProbabilityVector(std::vector<double> p);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const { return p_; }

 private:
  std::vector<double> p_;
};

Matrix tensor_product(const Matrix& a, const Matrix& b);

/// Reduced operator on the subsystems listed in `keep` (any order; the
/// output keeps the original subsystem ordering). Subsystem 0 is the most
/// significant factor of the joint index.
Matrix partial_trace(const Matrix& joint, std::span<const std::size_t> dims,
                     std::span<const std::size_t> keep);
DensityOperator partial_trace(const DensityOperator& joint, std::span<const std::size_t> dims,
                              std::span<const std::size_t> keep);

struct EigenSystem {
  RealVector values;  // ascending
  Matrix vectors;     // columns
};

// Both symmetrize their input before diagonalizing. Throws NumericalError
// if the solver fails.
RealVector hermitian_eigenvalues(const Matrix& m);
EigenSystem hermitian_eigensystem(const Matrix& m);

/// -sum_i l_i ln l_i over eigenvalues, clamping l_i < 1e-12 to zero. In nats.
double von_neumann_entropy(const DensityOperator& rho);
double von_neumann_entropy(const Matrix& rho);

double shannon_entropy(std::span<const double> p);
double shannon_entropy(const ProbabilityVector& p);

/// S(X) + S(Y) - S(XY) where X is the set of subsystems in `cut` and Y its
/// complement.
double mutual_information(const DensityOperator& joint, std::span<const std::size_t> dims,
                          std::span<const std::size_t> cut);

double log_partition(const Matrix& hamiltonian, double beta);

}  // namespace oqst
