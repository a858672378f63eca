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

#include "oqst/channels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "oqst/errors.hpp"

namespace oqst {

Instrument::Instrument(std::size_t dim, std::vector<OutcomeBranch> branches)
    : dim_(dim), branches_(std::move(branches)) {
  if (dim_ == 0) throw DimensionError("Instrument: zero dimension");
  if (branches_.empty()) throw DomainError("Instrument: no outcome branches");
  std::sort(branches_.begin(), branches_.end(),
            [](const OutcomeBranch& a, const OutcomeBranch& b) { return a.label < b.label; });
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    const auto& b = branches_[i];
    if (i > 0 && branches_[i - 1].label == b.label) {
      throw DomainError("Instrument: duplicate outcome label " + std::to_string(b.label));
    }
    if (b.kraus.empty()) {
      throw DomainError("Instrument: branch " + std::to_string(b.label) + " has no Kraus operators");
    }
    for (const auto& k : b.kraus) {
      if (static_cast<std::size_t>(k.rows()) != dim_ || static_cast<std::size_t>(k.cols()) != dim_) {
        throw DimensionError("Instrument: Kraus operator shape differs from instrument dimension");
      }
    }
  }
}

std::size_t Instrument::kraus_count() const {
  std::size_t n = 0;
  for (const auto& b : branches_) n += b.kraus.size();
  return n;
}

bool Instrument::is_efficient() const {
  return std::all_of(branches_.begin(), branches_.end(),
                     [](const OutcomeBranch& b) { return b.kraus.size() == 1; });
}

Matrix Instrument::apply_branch(std::size_t index, const Matrix& rho) const {
  const auto& b = branches_.at(index);
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  for (const auto& a : b.kraus) out.noalias() += a * rho * a.adjoint();
  return out;
}

Matrix Instrument::apply_average(const Matrix& rho) const {
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  for (std::size_t i = 0; i < branches_.size(); ++i) out += apply_branch(i, rho);
  return out;
}

VerificationReport verify_instrument(const Instrument& instr) {
  Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(instr.dim()),
                            static_cast<Eigen::Index>(instr.dim()));
  for (const auto& b : instr.branches()) {
    for (const auto& a : b.kraus) sum.noalias() += a.adjoint() * a;
  }
  const double dev = max_abs(sum - identity(instr.dim()));
  return {dev <= kCompletenessTolerance, dev};
}

namespace {
void require_same_dim(const Instrument& instr, const DensityOperator& rho, const char* who) {
  if (instr.dim() != rho.dim()) {
    throw DimensionError(std::string(who) + ": instrument dimension " + std::to_string(instr.dim()) +
                         " differs from state dimension " + std::to_string(rho.dim()));
  }
}
}  // namespace

std::vector<BranchResult> apply_instrument(const Instrument& instr, const DensityOperator& rho) {
  require_same_dim(instr, rho, "apply_instrument");
  std::vector<BranchResult> out;
  out.reserve(instr.outcome_count());
  for (std::size_t i = 0; i < instr.outcome_count(); ++i) {
    Matrix unnormalized = instr.apply_branch(i, rho.matrix());
    const double p = std::max(unnormalized.trace().real(), 0.0);
    BranchResult r;
    r.label = instr.branches()[i].label;
    r.probability = p;
    if (p >= kImpossibleOutcome) r.state = DensityOperator::assume_valid(unnormalized / p);
    out.push_back(std::move(r));
  }
  return out;
}

DensityOperator average_map(const Instrument& instr, const DensityOperator& rho) {
  require_same_dim(instr, rho, "average_map");
  return DensityOperator::assume_valid(instr.apply_average(rho.matrix()));
}

// --- Stinespring -------------------------------------------------------------

const Matrix& StinespringDilation::projector_for(int label) const {
  for (const auto& [l, p] : projectors) {
    if (l == label) return p;
  }
  throw DomainError("StinespringDilation: unknown outcome label " + std::to_string(label));
}

StinespringDilation stinespring_dilate(const Instrument& instr) {
  const VerificationReport check = verify_instrument(instr);
  if (!check.pass) {
    throw DomainError("stinespring_dilate: instrument is not complete (deviation " +
                      std::to_string(check.max_deviation) + ")");
  }
  const auto ds = static_cast<Eigen::Index>(instr.dim());
  const auto kraus_total = static_cast<Eigen::Index>(instr.kraus_count());
  const Eigen::Index du = std::max<Eigen::Index>(kraus_total, 2);
  const Eigen::Index n = ds * du;

  Matrix v = Matrix::Zero(n, n);
  std::vector<bool> filled(static_cast<std::size_t>(n), false);

  // Columns |s,0> carry the isometry sum_k A_k|s> (x) |k>.
  Eigen::Index k = 0;
  for (const auto& b : instr.branches()) {
    for (const auto& a : b.kraus) {
      for (Eigen::Index s = 0; s < ds; ++s) {
        for (Eigen::Index t = 0; t < ds; ++t) v(t * du + k, s * du) = a(t, s);
      }
      ++k;
    }
  }
  for (Eigen::Index s = 0; s < ds; ++s) filled[static_cast<std::size_t>(s * du)] = true;

  // Complete the remaining columns by Gram-Schmidt over the standard basis,
  // taken in index order so the construction is deterministic.
  Eigen::Index candidate = 0;
  for (Eigen::Index col = 0; col < n; ++col) {
    if (filled[static_cast<std::size_t>(col)]) continue;
    for (;; ++candidate) {
      if (candidate >= n) throw NumericalError("stinespring_dilate: basis completion failed");
      Vector w = Vector::Zero(n);
      w(candidate) = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index c = 0; c < n; ++c) {
          if (!filled[static_cast<std::size_t>(c)]) continue;
          w -= v.col(c) * v.col(c).dot(w);
        }
      }
      const double norm = w.norm();
      if (norm > 1e-6) {
        v.col(col) = w / norm;
        filled[static_cast<std::size_t>(col)] = true;
        ++candidate;
        break;
      }
    }
  }

  StinespringDilation dil;
  dil.system_dim = instr.dim();
  dil.unit_dim = static_cast<std::size_t>(du);
  dil.unit_state = DensityOperator::basis_state(dil.unit_dim, 0);
  dil.joint_unitary = std::move(v);

  k = 0;
  for (std::size_t i = 0; i < instr.outcome_count(); ++i) {
    const auto& b = instr.branches()[i];
    Matrix p = Matrix::Zero(du, du);
    for (std::size_t a = 0; a < b.kraus.size(); ++a, ++k) p(k, k) = 1.0;
    if (i == 0) {
      for (Eigen::Index pad = kraus_total; pad < du; ++pad) p(pad, pad) = 1.0;
    }
    dil.projectors.emplace_back(b.label, std::move(p));
  }
  return dil;
}

Matrix dilated_branch(const StinespringDilation& dil, const Matrix& rho, int label) {
  if (static_cast<std::size_t>(rho.rows()) != dil.system_dim) {
    throw DimensionError("dilated_branch: state dimension differs from dilation");
  }
  const Matrix joint = tensor_product(rho, dil.unit_state.matrix());
  const Matrix p = tensor_product(identity(dil.system_dim), dil.projector_for(label));
  const Matrix pv = p * dil.joint_unitary;
  const std::array<std::size_t, 2> dims{dil.system_dim, dil.unit_dim};
  const std::array<std::size_t, 1> keep{0};
  return partial_trace(Matrix(pv * joint * pv.adjoint()), dims, keep);
}

// --- constructors -------------------------------------------------------------

Instrument identity_instrument(std::size_t dim) {
  return Instrument(dim, {OutcomeBranch{0, {identity(dim)}}});
}

Instrument single_outcome_instrument(std::vector<Matrix> kraus) {
  if (kraus.empty()) throw DomainError("single_outcome_instrument: no Kraus operators");
  const auto dim = static_cast<std::size_t>(kraus.front().rows());
  return Instrument(dim, {OutcomeBranch{0, std::move(kraus)}});
}

namespace {
void require_orthonormal(std::span<const Vector> basis) {
  if (basis.empty()) throw DomainError("projective_instrument: empty basis");
  const auto dim = basis.front().size();
  if (static_cast<std::size_t>(dim) != basis.size()) {
    throw DomainError("projective_instrument: basis must span the space");
  }
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis[i].size() != dim) throw DimensionError("projective_instrument: ragged basis");
    for (std::size_t j = 0; j <= i; ++j) {
      const Complex g = basis[j].dot(basis[i]);
      const Complex expect = (i == j) ? Complex(1.0) : Complex(0.0);
      if (std::abs(g - expect) > 1e-10) {
        throw DomainError("projective_instrument: basis is not orthonormal");
      }
    }
  }
}
}  // namespace

Instrument projective_instrument(std::span<const Vector> basis) {
  require_orthonormal(basis);
  std::vector<OutcomeBranch> branches;
  branches.reserve(basis.size());
  for (std::size_t r = 0; r < basis.size(); ++r) {
    branches.push_back({static_cast<int>(r), {projector(basis[r])}});
  }
  return Instrument(basis.size(), std::move(branches));
}

std::vector<Vector> computational_basis(std::size_t dim) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < dim; ++i) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(dim));
    e(static_cast<Eigen::Index>(i)) = 1.0;
    out.push_back(std::move(e));
  }
  return out;
}

DensityOperator dephasing_map(std::span<const Vector> basis, const DensityOperator& rho) {
  if (basis.size() != rho.dim()) throw DimensionError("dephasing_map: basis size differs from state");
  require_orthonormal(basis);
  Matrix out = Matrix::Zero(rho.matrix().rows(), rho.matrix().cols());
  for (const auto& v : basis) {
    const Matrix p = projector(v);
    out += p * rho.matrix() * p;
  }
  return DensityOperator::assume_valid(std::move(out));
}

}  // namespace oqst
