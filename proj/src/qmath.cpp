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

#include "oqst/qmath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "oqst/errors.hpp"

namespace oqst {

Matrix identity(std::size_t dim) {
  return Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
}

Matrix projector(const Vector& v) { return v * v.adjoint(); }

Matrix basis_projector(std::size_t dim, std::size_t index) {
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  p(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
  return p;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double hermiticity_defect(const Matrix& m) { return max_abs(m - m.adjoint()); }

bool is_unitary(const Matrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  return max_abs(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())) <= tol;
}

Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

double expectation(const Matrix& op, const Matrix& rho) {
  if (op.rows() != rho.cols() || op.cols() != rho.rows()) {
    throw DimensionError("expectation: operator and state dimensions differ");
  }
  // tr{AB} = sum_ij A_ij B_ji
  return op.cwiseProduct(rho.transpose()).sum().real();
}

// --- DensityOperator ---------------------------------------------------------

DensityOperator::DensityOperator(Matrix m, Unchecked) : m_(std::move(m)) {}

DensityOperator::DensityOperator(Matrix m, double tol) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw DimensionError("DensityOperator: matrix must be square and nonempty");
  }
  if (hermiticity_defect(m) > tol) {
    throw DomainError("DensityOperator: matrix is not Hermitian");
  }
  if (std::abs(m.trace() - Complex(1.0)) > tol) {
    throw DomainError("DensityOperator: trace differs from one by " +
                      std::to_string(std::abs(m.trace() - Complex(1.0))));
  }
  m_ = hermitian_part(m);
  if (hermitian_eigenvalues(m_).minCoeff() < -tol) {
    throw DomainError("DensityOperator: matrix has a negative eigenvalue");
  }
}

DensityOperator DensityOperator::assume_valid(Matrix m) {
  return DensityOperator(hermitian_part(m), Unchecked{});
}

DensityOperator DensityOperator::pure(const Vector& psi) {
  const double n = psi.norm();
  if (n == 0.0) throw DomainError("DensityOperator::pure: zero vector");
  return DensityOperator(projector(psi / n), Unchecked{});
}

DensityOperator DensityOperator::basis_state(std::size_t dim, std::size_t index) {
  if (index >= dim) throw DimensionError("basis_state: index out of range");
  return DensityOperator(basis_projector(dim, index), Unchecked{});
}

DensityOperator DensityOperator::maximally_mixed(std::size_t dim) {
  if (dim == 0) throw DimensionError("maximally_mixed: zero dimension");
  return DensityOperator(identity(dim) / static_cast<double>(dim), Unchecked{});
}

DensityOperator DensityOperator::diagonal(std::span<const double> populations) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(populations.size()),
                          static_cast<Eigen::Index>(populations.size()));
  for (std::size_t i = 0; i < populations.size(); ++i) {
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = populations[i];
  }
  return DensityOperator(std::move(m));
}

DensityOperator DensityOperator::gibbs(const Matrix& hamiltonian, double beta) {
  const EigenSystem es = hermitian_eigensystem(hamiltonian);
  const double e_min = es.values.minCoeff();
  RealVector w = (-beta * (es.values.array() - e_min)).exp();
  w /= w.sum();
  Matrix m = es.vectors * w.cast<Complex>().asDiagonal() * es.vectors.adjoint();
  return DensityOperator(hermitian_part(m), Unchecked{});
}

double DensityOperator::purity() const { return (m_ * m_).trace().real(); }

std::vector<double> DensityOperator::populations() const {
  std::vector<double> p(dim());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  }
  return p;
}

ProbabilityVector::ProbabilityVector(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw DomainError("ProbabilityVector: empty");
  double sum = 0.0;
  for (double x : p_) {
    if (!(x >= 0.0)) throw DomainError("ProbabilityVector: negative or NaN entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw DomainError("ProbabilityVector: entries sum to " + std::to_string(sum));
  }
}

// --- products and partial traces --------------------------------------------

Matrix tensor_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

namespace {

struct Split {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> traced;
  std::size_t kept_dim = 1;
};

// For every joint basis index, its index within the kept and traced factors.
Split split_indices(std::size_t joint_dim, std::span<const std::size_t> dims,
                    std::span<const std::size_t> keep) {
  std::size_t total = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw DimensionError("partial_trace: zero subsystem dimension");
    total *= d;
  }
  if (total != joint_dim) {
    throw DimensionError("partial_trace: product of dims " + std::to_string(total) +
                         " differs from joint dimension " + std::to_string(joint_dim));
  }
  std::vector<bool> is_kept(dims.size(), false);
  for (std::size_t k : keep) {
    if (k >= dims.size()) throw DimensionError("partial_trace: subsystem index out of range");
    if (is_kept[k]) throw DimensionError("partial_trace: subsystem listed twice");
    is_kept[k] = true;
  }

  Split s;
  s.kept.resize(joint_dim);
  s.traced.resize(joint_dim);
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (is_kept[k]) s.kept_dim *= dims[k];
  }
  for (std::size_t idx = 0; idx < joint_dim; ++idx) {
    std::size_t rem = idx;
    std::size_t kept = 0, traced = 0, kept_stride = 1, traced_stride = 1;
    for (std::size_t k = dims.size(); k-- > 0;) {
      const std::size_t digit = rem % dims[k];
      rem /= dims[k];
      if (is_kept[k]) {
        kept += digit * kept_stride;
        kept_stride *= dims[k];
      } else {
        traced += digit * traced_stride;
        traced_stride *= dims[k];
      }
    }
    s.kept[idx] = kept;
    s.traced[idx] = traced;
  }
  return s;
}

}  // namespace

Matrix partial_trace(const Matrix& joint, std::span<const std::size_t> dims,
                     std::span<const std::size_t> keep) {
  if (joint.rows() != joint.cols()) throw DimensionError("partial_trace: non-square operator");
  const auto n = static_cast<std::size_t>(joint.rows());
  const Split s = split_indices(n, dims, keep);
  const auto kd = static_cast<Eigen::Index>(s.kept_dim);
  Matrix out = Matrix::Zero(kd, kd);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (s.traced[i] != s.traced[j]) continue;
      out(static_cast<Eigen::Index>(s.kept[i]), static_cast<Eigen::Index>(s.kept[j])) +=
          joint(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

DensityOperator partial_trace(const DensityOperator& joint, std::span<const std::size_t> dims,
                              std::span<const std::size_t> keep) {
  return DensityOperator::assume_valid(partial_trace(joint.matrix(), dims, keep));
}

// --- spectra and entropies -------------------------------------------------

EigenSystem hermitian_eigensystem(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("eigensystem: non-square matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(Eigen::MatrixXcd(hermitian_part(m)));
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition did not converge");
  }
  return {solver.eigenvalues(), Matrix(solver.eigenvectors())};
}

RealVector hermitian_eigenvalues(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("eigenvalues: non-square matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(Eigen::MatrixXcd(hermitian_part(m)),
                                                         Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition did not converge");
  }
  return solver.eigenvalues();
}

namespace {
double entropy_term(double x) { return x < kEigenClamp ? 0.0 : -x * std::log(x); }
}  // namespace

double von_neumann_entropy(const Matrix& rho) {
  const RealVector ev = hermitian_eigenvalues(rho);
  double s = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) s += entropy_term(ev(i));
  return std::max(s, 0.0);
}

double von_neumann_entropy(const DensityOperator& rho) { return von_neumann_entropy(rho.matrix()); }

double shannon_entropy(std::span<const double> p) {
  double s = 0.0;
  for (double x : p) s += x > 0.0 ? -x * std::log(x) : 0.0;
  return s;
}

double shannon_entropy(const ProbabilityVector& p) { return shannon_entropy(p.values()); }

double mutual_information(const DensityOperator& joint, std::span<const std::size_t> dims,
                          std::span<const std::size_t> cut) {
  std::vector<bool> in_cut(dims.size(), false);
  for (std::size_t k : cut) {
    if (k >= dims.size()) throw DimensionError("mutual_information: subsystem out of range");
    in_cut[k] = true;
  }
  std::vector<std::size_t> rest;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (!in_cut[k]) rest.push_back(k);
  }
  if (cut.empty() || rest.empty()) {
    throw DimensionError("mutual_information: bipartition must have two nonempty sides");
  }
  const Matrix rx = partial_trace(joint.matrix(), dims, cut);
  const Matrix ry = partial_trace(joint.matrix(), dims, rest);
  return von_neumann_entropy(rx) + von_neumann_entropy(ry) - von_neumann_entropy(joint);
}

double log_partition(const Matrix& hamiltonian, double beta) {
  const RealVector ev = hermitian_eigenvalues(hamiltonian);
  const double e_min = ev.minCoeff();
  return -beta * e_min + std::log((-beta * (ev.array() - e_min)).exp().sum());
}

}  // namespace oqst
