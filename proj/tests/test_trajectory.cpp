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
#include <map>
#include <memory>
#include <numbers>

#include "oqst/errors.hpp"
#include "oqst/random.hpp"
#include "oqst/trajectory.hpp"

using namespace oqst;

namespace {

Vector plus() {
  Vector v(2);
  v << 1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2;
  return v;
}

ControlHandle op(Instrument i, int kind = 0, bool feedback = false) {
  return std::make_shared<const ControlOperation>(std::move(i), kind, feedback);
}

ThermalGenerator frozen_qubit() {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 0.5;
  h(1, 1) = -0.5;
  return ThermalGenerator(h, {}, 1.0, 0.0);
}

}  // namespace

TEST_CASE("schedules") {
  CHECK_THROWS_AS(ControlSchedule({1.0, 1.0}, 2.0), DomainError);
  CHECK_THROWS_AS(ControlSchedule({1.0, 0.5}, 2.0), DomainError);
  CHECK_THROWS_AS(ControlSchedule({1.0}, 0.5), DomainError);
  const ControlSchedule u = ControlSchedule::uniform(4, 0.25);
  REQUIRE(u.size() == 4);
  CHECK(u.times()[3] == doctest::Approx(1.0));
  const ControlSchedule t = u.truncated(2);
  CHECK(t.size() == 2);
  CHECK(t.end_time() == doctest::Approx(0.5));
}

TEST_CASE("empty schedule") {
  const ThermalGenerator g = thermal_qubit_generator(1.0, 1.0, 0.4);
  const DensityOperator rho0 = DensityOperator::pure(plus());
  const ControlSchedule none({}, 2.0);
  const auto rec = sample_trajectory(g, none, open_loop_policy({{op(identity_instrument(2)), {}}}), rho0, 1);
  CHECK(rec.outcomes.empty());
  CHECK(rec.log_prob == 0.0);
  CHECK(max_abs(rec.final_state.matrix() - propagate(g, rho0, 2.0, PropagationMethod::exact).matrix()) < 1e-12);
}

TEST_CASE("single fair measurement enumerates two equal leaves") {
  const ThermalGenerator g = frozen_qubit();
  const auto policy = open_loop_policy({{op(projective_instrument(computational_basis(2))), {}}});
  const auto leaves = enumerate_tree(g, ControlSchedule::uniform(1, 1.0), policy, DensityOperator::pure(plus()), 1);
  REQUIRE(leaves.size() == 2);
  for (const auto& l : leaves) {
    CHECK(l.probability == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(l.record.log_prob == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    // Stochastic entropy after the fair measurement: ln 2 plus a pure state.
    CHECK(l.record.ledgers[0].entropy_end == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("enumeration probabilities are consistent") {
  random::Engine rng(31);
  const ThermalGenerator g = thermal_qubit_generator(1.0, 0.9, 0.6);
  const auto policy = open_loop_policy({{op(random::instrument(2, {1, 1, 1}, rng)), {}},
                                        {op(random::instrument(2, {2, 1}, rng)), {}}});
  const auto leaves = enumerate_tree(g, ControlSchedule::uniform(3, 0.4), policy, random::density(2, rng), 3);
  double total = 0.0;
  for (const auto& l : leaves) {
    total += l.probability;
    CHECK(std::abs(l.record.log_prob + std::log(l.probability)) <= 1e-10);
    for (const auto& lg : l.record.ledgers) {
      CHECK(std::abs(lg.first_law_residual()) <= 1e-10);
      CHECK(lg.sigma_seg >= -1e-10);
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("z measurements: sampled frequencies match enumeration") {
  const ThermalGenerator g = frozen_qubit();
  const ControlSchedule sched = ControlSchedule::uniform(2, 1.0);
  const auto policy = open_loop_policy({{op(projective_instrument(computational_basis(2))), {}}});
  random::Engine rng(32);
  const DensityOperator rho0 = random::density(2, rng);
  const auto leaves = enumerate_tree(g, sched, policy, rho0, 2);
  EngineOptions o;
  o.keep_states = false;
  const std::size_t n = 100000;
  const auto recs = sample_ensemble(g, sched, policy, rho0, 99, n, o);
  std::map<std::vector<int>, double> freq;
  for (const auto& r : recs) freq[r.outcomes] += 1.0 / static_cast<double>(n);
  for (const auto& l : leaves) {
    const double se = std::sqrt(l.probability * (1.0 - l.probability) / static_cast<double>(n));
    if (se == 0.0) {
      CHECK(freq[l.outcomes] == 0.0);
    } else {
      CHECK(std::abs(freq[l.outcomes] - l.probability) <= 3.0 * se);
    }
  }
}

TEST_CASE("replay and reproducibility") {
  random::Engine rng(33);
  const ThermalGenerator g = thermal_qubit_generator(1.0, 0.9, 0.6);
  const ControlSchedule sched = ControlSchedule::uniform(5, 0.2);
  const auto policy = open_loop_policy({{op(random::instrument(2, {1, 1}, rng)), {}}});
  const DensityOperator rho0 = random::density(2, rng);
  const auto a = sample_trajectory(g, sched, policy, rho0, 5, {}, 17);
  const auto b = sample_trajectory(g, sched, policy, rho0, 5, {}, 17);
  CHECK(a.outcomes == b.outcomes);
  CHECK(a.log_prob == b.log_prob);
  const auto c = replay_trajectory(g, sched, policy, rho0, a.outcomes);
  CHECK(c.log_prob == doctest::Approx(a.log_prob).epsilon(1e-14));
  const std::vector<int> unknown{0, 0, 7, 0, 0};
  CHECK_THROWS_AS(replay_trajectory(g, sched, policy, rho0, unknown), DomainError);

  const auto serial = sample_ensemble(g, sched, policy, rho0, 5, 64, {}, Execution::serial);
  const auto parallel = sample_ensemble(g, sched, policy, rho0, 5, 64, {}, Execution::parallel, 3);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].outcomes == parallel[i].outcomes);
    CHECK(serial[i].log_prob == parallel[i].log_prob);
  }
  CHECK(serial[17].outcomes == a.outcomes);
}

TEST_CASE("impossible replay is rejected") {
  const ThermalGenerator g = frozen_qubit();
  const auto policy = open_loop_policy({{op(projective_instrument(computational_basis(2))), {}}});
  const std::vector<int> outcomes{1};
  CHECK_THROWS_AS(replay_trajectory(g, ControlSchedule::uniform(1, 1.0), policy,
                                    DensityOperator::basis_state(2, 0), outcomes),
                  DomainError);
}

TEST_CASE("delayed policy input and cooldown") {
  const ThermalGenerator g = frozen_qubit();
  auto sense = op(projective_instrument(computational_basis(2)), 0);
  auto kick = op(identity_instrument(2), 1, true);
  std::vector<std::size_t> seen;
  FeedbackPolicy p;
  p.delay = 2;
  p.cooldown = 2;
  p.rule = [&](const PolicyInput& in) {
    seen.push_back(in.known_outcomes.size());
    return ControlDecision{in.step == 4 ? kick : sense, {}};
  };
  p.idle = [&](std::size_t) { return ControlDecision{sense, {}}; };
  const auto rec = sample_trajectory(g, ControlSchedule::uniform(8, 1.0), p, DensityOperator::pure(plus()), 3);
  // The rule is not consulted on steps 5 and 6 (cooldown after step 4).
  const std::vector<std::size_t> expect{0, 0, 0, 1, 4, 5};
  CHECK(seen == expect);
  const std::vector<int> kinds{0, 0, 0, 1, 0, 0, 0, 0};
  CHECK(rec.kinds == kinds);
}

TEST_CASE("joint tracking") {
  random::Engine rng(34);
  const ThermalGenerator g = thermal_qubit_generator(1.0, 0.9, 0.6);
  const auto policy = open_loop_policy({{op(random::instrument(2, {2, 1}, rng)), {}}});
  EngineOptions o;
  o.tracking = TrackingMode::efficient;
  CHECK_THROWS_AS(sample_trajectory(g, ControlSchedule::uniform(2, 0.3), policy, DensityOperator::maximally_mixed(2), 1, o),
                  DomainError);
  o.tracking = TrackingMode::joint;
  o.max_units = 2;
  CHECK_NOTHROW(sample_trajectory(g, ControlSchedule::uniform(2, 0.3), policy, DensityOperator::maximally_mixed(2), 1, o));
  CHECK_THROWS_AS(sample_trajectory(g, ControlSchedule::uniform(3, 0.3), policy, DensityOperator::maximally_mixed(2), 1, o),
                  DomainError);
}

TEST_CASE("ensemble statistics") {
  const ThermalGenerator g = thermal_qubit_generator(1.0, 0.9, 0.6);
  const auto policy = open_loop_policy({{op(projective_instrument(computational_basis(2))), {}}});
  const ControlSchedule sched = ControlSchedule::uniform(2, 0.5);
  const auto one = sample_ensemble(g, sched, policy, DensityOperator::pure(plus()), 1, 1);
  const EnsembleReport r = ensemble_statistics(one, Weighting::equal);
  CHECK(r.column(LedgerColumn::q_ctrl).mean[1] == one[0].ledgers[1].q_ctrl_system);
  CHECK(r.column(LedgerColumn::q_ctrl).se[1] == 0.0);
  CHECK(max_abs(r.averaged_states[1] - one[0].states[1].matrix()) == 0.0);

  std::vector<TrajectoryRecord> mixed = one;
  mixed.push_back(sample_trajectory(g, ControlSchedule::uniform(1, 0.5), policy, DensityOperator::pure(plus()), 1));
  CHECK_THROWS_AS(ensemble_statistics(mixed, Weighting::equal), DimensionError);
}
