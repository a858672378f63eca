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

#include "oqst/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "oqst/errors.hpp"

namespace oqst {

namespace {
constexpr double kHbar = 1.054571817e-34;      // J s
constexpr double kBoltzmann = 1.380649e-23;    // J/K
constexpr double kPositivityLeak = 1e-9;
}  // namespace

ThermalGenerator::ThermalGenerator(Matrix hamiltonian, std::vector<Dissipator> dissipators,
                                   double beta, double coherent_scale)
    : hamiltonian_(std::move(hamiltonian)),
      dissipators_(std::move(dissipators)),
      beta_(beta),
      coherent_scale_(coherent_scale) {
  if (hamiltonian_.rows() == 0 || hamiltonian_.rows() != hamiltonian_.cols()) {
    throw DimensionError("ThermalGenerator: Hamiltonian must be square and nonempty");
  }
  if (hermiticity_defect(hamiltonian_) > 1e-10) {
    throw DomainError("ThermalGenerator: Hamiltonian is not Hermitian");
  }
  for (const auto& d : dissipators_) {
    if (d.jump.rows() != hamiltonian_.rows() || d.jump.cols() != hamiltonian_.cols()) {
      throw DimensionError("ThermalGenerator: jump operator shape differs from Hamiltonian");
    }
    if (!(d.rate >= 0.0)) throw DomainError("ThermalGenerator: negative dissipation rate");
  }
}

ThermalGenerator ThermalGenerator::with_hamiltonian(Matrix h) const {
  return ThermalGenerator(std::move(h), dissipators_, beta_, coherent_scale_);
}

Matrix ThermalGenerator::apply(const Matrix& rho) const {
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  if (coherent_scale_ != 0.0) {
    out += Complex(0.0, -coherent_scale_) * (hamiltonian_ * rho - rho * hamiltonian_);
  }
  for (const auto& d : dissipators_) {
    if (d.rate == 0.0) continue;
    const Matrix jdj = d.jump.adjoint() * d.jump;
    out += d.rate * (d.jump * rho * d.jump.adjoint() - 0.5 * (jdj * rho + rho * jdj));
  }
  return out;
}

Matrix ThermalGenerator::superoperator() const {
  const auto d = hamiltonian_.rows();
  const Matrix id = Matrix::Identity(d, d);
  Matrix l = Matrix::Zero(d * d, d * d);
  if (coherent_scale_ != 0.0) {
    l += Complex(0.0, -coherent_scale_) *
         (tensor_product(hamiltonian_, id) - tensor_product(id, hamiltonian_.transpose()));
  }
  for (const auto& ds : dissipators_) {
    if (ds.rate == 0.0) continue;
    const Matrix jdj = ds.jump.adjoint() * ds.jump;
    l += ds.rate * (tensor_product(ds.jump, ds.jump.conjugate()) -
                    0.5 * tensor_product(jdj, id) - 0.5 * tensor_product(id, jdj.transpose()));
  }
  return l;
}

RealMatrix ThermalGenerator::population_rates() const {
  const auto d = hamiltonian_.rows();
  if (max_abs(hamiltonian_ - Matrix(hamiltonian_.diagonal().asDiagonal())) > 1e-12) {
    throw DomainError("population_rates: Hamiltonian is not diagonal");
  }
  RealMatrix r = RealMatrix::Zero(d, d);
  for (const auto& ds : dissipators_) {
    for (Eigen::Index n = 0; n < d; ++n) {
      Eigen::Index nonzero = 0;
      for (Eigen::Index m = 0; m < d; ++m) {
        const double w = std::norm(ds.jump(m, n));
        if (w == 0.0) continue;
        ++nonzero;
        r(m, n) += ds.rate * w;
        r(n, n) -= ds.rate * w;
      }
      if (nonzero > 1) {
        throw DomainError("population_rates: jump operator creates coherences");
      }
    }
  }
  return r;
}

double bose_einstein_occupation(double omega_c, double temperature) {
  return 1.0 / std::expm1(dimensionless_beta(omega_c, temperature));
}

double dimensionless_beta(double omega_c, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  if (!(omega_c > 0.0)) throw DomainError("cavity frequency must be positive");
  return kHbar * omega_c / (kBoltzmann * temperature);
}

Matrix annihilation(std::size_t cutoff) {
  const auto d = static_cast<Eigen::Index>(cutoff + 1);
  Matrix a = Matrix::Zero(d, d);
  for (Eigen::Index n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Matrix number_operator(std::size_t cutoff) {
  const auto d = static_cast<Eigen::Index>(cutoff + 1);
  Matrix n = Matrix::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k) n(k, k) = static_cast<double>(k);
  return n;
}

ThermalGenerator thermal_cavity_generator(double omega_c, double temperature, double lifetime_tc,
                                          std::size_t cutoff) {
  if (!(lifetime_tc > 0.0)) throw DomainError("cavity lifetime must be positive");
  if (cutoff == 0) throw DomainError("cavity cutoff must be at least 1");
  const double beta = dimensionless_beta(omega_c, temperature);
  const double n_th = 1.0 / std::expm1(beta);
  const Matrix a = annihilation(cutoff);
  std::vector<Dissipator> ds{{a, (1.0 + n_th) / lifetime_tc}, {a.adjoint(), n_th / lifetime_tc}};
  return ThermalGenerator(number_operator(cutoff), std::move(ds), beta, 0.0);
}

ThermalGenerator thermal_qubit_generator(double omega, double beta, double gamma) {
  if (!(omega > 0.0) || !(beta > 0.0) || !(gamma >= 0.0)) {
    throw DomainError("thermal_qubit_generator: need omega > 0, beta > 0, gamma >= 0");
  }
  const double n = 1.0 / std::expm1(beta * omega);
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 0.5 * omega;
  h(1, 1) = -0.5 * omega;
  Matrix lower = Matrix::Zero(2, 2);  // |1><0|: excited (index 0) to ground (index 1)
  lower(1, 0) = 1.0;
  std::vector<Dissipator> ds{{lower, gamma * (1.0 + n)}, {lower.adjoint(), gamma * n}};
  return ThermalGenerator(std::move(h), std::move(ds), beta);
}

// --- propagation --------------------------------------------------------------

namespace {

void require_nonnegative_dt(double dt) {
  if (!(dt >= 0.0)) throw DomainError("propagate: negative time step");
}

Matrix unvec(const Vector& v, Eigen::Index d) {
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = v(i * d + j);
  }
  return m;
}

Vector vec(const Matrix& m) {
  const auto d = m.rows();
  Vector v(d * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) v(i * d + j) = m(i, j);
  }
  return v;
}

// The first-order map can push populations a hair below zero; anything
// beyond the leak tolerance is an error.
void clamp_populations(Matrix& rho) {
  bool clamped = false;
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    const double p = rho(i, i).real();
    if (p >= 0.0) continue;
    if (p < -kPositivityLeak) {
      throw NumericalError("first-order propagation lost positivity (population " +
                           std::to_string(p) + ")");
    }
    rho(i, i) = 0.0;
    clamped = true;
  }
  if (clamped) rho /= rho.trace().real();
}

void clamp_populations(std::vector<double>& p) {
  bool clamped = false;
  for (double& x : p) {
    if (x >= 0.0) continue;
    if (x < -kPositivityLeak) {
      throw NumericalError("first-order propagation lost positivity (population " +
                           std::to_string(x) + ")");
    }
    x = 0.0;
    clamped = true;
  }
  if (clamped) {
    double s = 0.0;
    for (double x : p) s += x;
    for (double& x : p) x /= s;
  }
}

}  // namespace

Propagator::Propagator(const ThermalGenerator& gen, double dt, PropagationMethod method)
    : dim_(gen.dim()), dt_(dt), method_(method) {
  require_nonnegative_dt(dt);
  const Matrix l = gen.superoperator();
  if (method == PropagationMethod::first_order) {
    map_ = Matrix::Identity(l.rows(), l.cols()) + dt * l;
  } else {
    const Eigen::MatrixXcd ldt = dt * l;
    map_ = ldt.exp();
  }
}

DensityOperator Propagator::apply(const DensityOperator& rho) const {
  if (rho.dim() != dim_) throw DimensionError("Propagator: state dimension differs from generator");
  if (dt_ == 0.0) return rho;
  Matrix out = unvec(map_ * vec(rho.matrix()), static_cast<Eigen::Index>(dim_));
  if (method_ == PropagationMethod::first_order) clamp_populations(out);
  return DensityOperator::assume_valid(std::move(out));
}

Matrix Propagator::apply_linear(const Matrix& block) const {
  if (dt_ == 0.0) return block;
  return unvec(map_ * vec(block), static_cast<Eigen::Index>(dim_));
}

Matrix Propagator::apply_to_leading_factor(const Matrix& joint, std::size_t rest_dim) const {
  const auto d = static_cast<Eigen::Index>(dim_);
  const auto r = static_cast<Eigen::Index>(rest_dim);
  if (joint.rows() != d * r || joint.cols() != d * r) {
    throw DimensionError("Propagator: joint operator does not match dim * rest_dim");
  }
  if (dt_ == 0.0 || r == 1) return r == 1 ? apply_linear(joint) : joint;
  // Column (u, v) holds the system block <.u| joint |.v>, row-major vectorized.
  Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> blocks(d * d, r * r);
  for (Eigen::Index s = 0; s < d; ++s)
    for (Eigen::Index u = 0; u < r; ++u)
      for (Eigen::Index t = 0; t < d; ++t)
        for (Eigen::Index v = 0; v < r; ++v) blocks(s * d + t, u * r + v) = joint(s * r + u, t * r + v);
  const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> mapped = map_ * blocks;
  Matrix out(joint.rows(), joint.cols());
  for (Eigen::Index s = 0; s < d; ++s)
    for (Eigen::Index u = 0; u < r; ++u)
      for (Eigen::Index t = 0; t < d; ++t)
        for (Eigen::Index v = 0; v < r; ++v) out(s * r + u, t * r + v) = mapped(s * d + t, u * r + v);
  return out;
}

DensityOperator propagate(const ThermalGenerator& gen, const DensityOperator& rho, double dt,
                          PropagationMethod method) {
  require_nonnegative_dt(dt);
  if (dt == 0.0) return rho;
  return Propagator(gen, dt, method).apply(rho);
}

PopulationPropagator::PopulationPropagator(const ThermalGenerator& gen, double dt,
                                           PropagationMethod method)
    : method_(method) {
  require_nonnegative_dt(dt);
  const RealMatrix r = gen.population_rates();
  if (method == PropagationMethod::first_order) {
    map_ = RealMatrix::Identity(r.rows(), r.cols()) + dt * r;
  } else {
    const Eigen::MatrixXd rdt = dt * r;
    map_ = rdt.exp();
  }
}

std::vector<double> PopulationPropagator::apply(std::span<const double> p) const {
  if (static_cast<Eigen::Index>(p.size()) != map_.cols()) {
    throw DimensionError("PopulationPropagator: population vector has wrong length");
  }
  const Eigen::Map<const RealVector> in(p.data(), static_cast<Eigen::Index>(p.size()));
  const RealVector out = map_ * in;
  std::vector<double> result(out.data(), out.data() + out.size());
  if (method_ == PropagationMethod::first_order) clamp_populations(result);
  return result;
}

// --- protocols and segment thermodynamics ------------------------------------

Protocol Protocol::constant(Matrix h) {
  Protocol p;
  p.kind_ = Kind::constant;
  p.knots_.emplace_back(0.0, std::move(h));
  return p;
}

Protocol Protocol::piecewise(std::vector<std::pair<double, Matrix>> knots) {
  if (knots.empty()) throw DomainError("Protocol::piecewise: no knots");
  std::stable_sort(knots.begin(), knots.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  Protocol p;
  p.kind_ = knots.size() == 1 ? Kind::constant : Kind::piecewise;
  p.knots_ = std::move(knots);
  return p;
}

Protocol Protocol::continuous(std::function<Matrix(double)> schedule) {
  Protocol p;
  p.kind_ = Kind::continuous;
  p.schedule_ = std::move(schedule);
  return p;
}

Matrix Protocol::at(double t) const {
  switch (kind_) {
    case Kind::constant:
      return knots_.front().second;
    case Kind::piecewise: {
      const Matrix* h = &knots_.front().second;
      for (const auto& [start, m] : knots_) {
        if (start <= t) h = &m;
      }
      return *h;
    }
    case Kind::continuous:
      return schedule_(t);
  }
  return knots_.front().second;
}

SegmentResult heat_work_segment(const ThermalGenerator& gen, const Protocol& protocol,
                                const DensityOperator& rho_start, double t_start, double t_end,
                                std::size_t substeps, PropagationMethod method) {
  if (!(t_end >= t_start)) throw DomainError("heat_work_segment: t_end precedes t_start");
  if (substeps == 0) throw DomainError("heat_work_segment: substeps must be positive");

  SegmentResult out;
  if (protocol.is_constant()) {
    const Matrix h = protocol.at(t_start);
    const DensityOperator rho_end =
        propagate(gen.with_hamiltonian(h), rho_start, t_end - t_start, method);
    out.heat = expectation(h, rho_end.matrix() - rho_start.matrix());
    out.rho_end = rho_end;
    return out;
  }

  const double dt = (t_end - t_start) / static_cast<double>(substeps);
  DensityOperator rho = rho_start;
  Matrix h = protocol.at(t_start);
  for (std::size_t k = 0; k < substeps; ++k) {
    const DensityOperator next = propagate(gen.with_hamiltonian(h), rho, dt, method);
    out.heat += expectation(h, next.matrix() - rho.matrix());
    const double t_next = (k + 1 == substeps) ? t_end : t_start + static_cast<double>(k + 1) * dt;
    const Matrix h_next = protocol.at(t_next);
    out.work += expectation(h_next - h, next.matrix());
    h = h_next;
    rho = next;
  }
  out.rho_end = rho;
  return out;
}

}  // namespace oqst
