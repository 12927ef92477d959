// Copyright 2026 The VQGO Authors
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

#include <gtest/gtest.h>

#include "test_helpers.hpp"
#include "vqgo/analysis.hpp"
#include "vqgo/ansatz.hpp"
#include "vqgo/devices.hpp"
#include "vqgo/optimkit.hpp"

namespace vqgo {
namespace {

// Central differences of agi_cost, step h.
std::vector<double> finite_difference(const CircuitParams& p, const SourceGateSet& s, const ComplexMatrix& t,
                                      double h = 1e-6) {
  std::vector<double> g(p.values().size());
  CircuitParams q = p;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double base = p.values()[k];
    q.values()[k] = base + h;
    const double up = agi_cost(q, s, t);
    q.values()[k] = base - h;
    const double down = agi_cost(q, s, t);
    q.values()[k] = base;
    g[k] = (up - down) / (2 * h);
  }
  return g;
}

// Two full shifted-cost evaluations per component.
std::vector<double> naive_shift(const CircuitParams& p, const SourceGateSet& s, const ComplexMatrix& t) {
  std::vector<double> g(p.values().size());
  CircuitParams q = p;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double base = p.values()[k];
    q.values()[k] = base + kPi / 4;
    const double up = agi_cost(q, s, t);
    q.values()[k] = base - kPi / 4;
    g[k] = up - agi_cost(q, s, t);
    q.values()[k] = base;
  }
  return g;
}

TEST(CircuitShape, ParameterCount) {
  const CircuitShape s{5, 2};
  EXPECT_EQ(s.parameter_count(), 45u);
  EXPECT_EQ(s.dim(), 32);
  EXPECT_THROW((CircuitShape{0, 1}.validate()), ModelError);
  EXPECT_THROW((CircuitShape{2, 0}.validate()), ModelError);
}

TEST(CircuitParams, IndexingAndWrapping) {
  CircuitParams p({2, 1});
  EXPECT_EQ(p.index(1, 0, 2), 8u);
  p(1, 1, 2) = -0.5;
  p(0, 0, 0) = 2 * kPi + 0.25;
  const auto w = p.wrapped();
  EXPECT_NEAR(w(1, 1, 2), 2 * kPi - 0.5, 1e-15);
  EXPECT_NEAR(w(0, 0, 0), 0.25, 1e-14);
  for (double t : w.values()) {
    EXPECT_GE(t, 0.0);
    EXPECT_LT(t, 2 * kPi);
  }
  EXPECT_THROW(CircuitParams({2, 1}, std::vector<double>(5)), ModelError);
}

TEST(CircuitParams, RandomIsSeededAndInRange) {
  RandomSource a(1), b(1);
  const auto p = CircuitParams::random({3, 2}, a);
  const auto q = CircuitParams::random({3, 2}, b);
  EXPECT_TRUE(std::equal(p.values().begin(), p.values().end(), q.values().begin()));
  for (double t : p.values()) {
    EXPECT_GE(t, 0.0);
    EXPECT_LT(t, 2 * kPi);
  }
}

TEST(EulerGate, Examples) {
  EXPECT_LT(max_abs_diff(euler_gate(0, 0, 0), identity(2)), 1e-15);
  EXPECT_LT(max_abs_diff(euler_gate(kPi / 2, 0, 0), -kI * pauli_matrix("X")), 1e-15);
  EXPECT_LT(max_abs_diff(euler_gate(0.3, 0, 1.1), euler_gate(1.4, 0, 0)), 1e-15);
  const ComplexMatrix expected = testing::taylor_expm(pauli_matrix("X"), 0.2) * testing::taylor_expm(pauli_matrix("Y"), 0.7) *
                                 testing::taylor_expm(pauli_matrix("X"), 1.3);
  EXPECT_LT(max_abs_diff(euler_gate(0.2, 0.7, 1.3), expected), 1e-13);
}

TEST(BuildCircuit, Examples) {
  EXPECT_LT(max_abs_diff(build_circuit(CircuitParams({2, 2}), {identity(4), identity(4)}), identity(4)), 1e-15);

  RandomSource rng(2);
  const auto p = CircuitParams::random({1, 1}, rng);
  const ComplexMatrix expected = euler_gate(p(0, 0, 0), p(0, 0, 1), p(0, 0, 2)) * euler_gate(p(1, 0, 0), p(1, 0, 1), p(1, 0, 2));
  EXPECT_LT(max_abs_diff(build_circuit(p, {identity(2)}), expected), 1e-15);

  const auto q = CircuitParams::random({2, 3}, rng);
  const SourceGateSet s{haar_unitary(4, rng), gates::cnot(), haar_unitary(4, rng)};
  EXPECT_TRUE(is_unitary(build_circuit(q, s)));
  EXPECT_THROW(build_circuit(q, {gates::cnot()}), ModelError);
}

TEST(BuildCircuit, LayerOrderLeftmostIsLast) {
  RandomSource rng(3);
  const auto p = CircuitParams::random({2, 2}, rng);
  const SourceGateSet s{haar_unitary(4, rng), haar_unitary(4, rng)};
  auto layer = [&](int i) { return kron(euler_gate(p(i, 0, 0), p(i, 0, 1), p(i, 0, 2)), euler_gate(p(i, 1, 0), p(i, 1, 1), p(i, 1, 2))); };
  const ComplexMatrix expected = layer(0) * s[0] * layer(1) * s[1] * layer(2);
  EXPECT_LT(max_abs_diff(build_circuit(p, s), expected), 1e-14);
}

TEST(BuildCircuit, IdentitySourcesGiveProductOperator) {
  RandomSource rng(4);
  const auto p = CircuitParams::random({2, 2}, rng);
  const auto spectrum = operator_schmidt(build_circuit(p, {identity(4), identity(4)}));
  EXPECT_NEAR(spectrum.lambda[0], 4.0, 1e-10);
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(spectrum.lambda[k], 0.0, 1e-10);
}

TEST(BuildCircuit, RejectsNonUnitarySource) {
  EXPECT_THROW(AgiObjective(gates::cnot(), {2.0 * gates::cnot()}, {2, 1}), ModelError);
}

TEST(AgiCost, Examples) {
  RandomSource rng(5);
  const auto p = CircuitParams::random({2, 2}, rng);
  const SourceGateSet s{haar_unitary(4, rng), haar_unitary(4, rng)};
  EXPECT_NEAR(agi_cost(p, s, build_circuit(p, s)), 0.0, 1e-14);
  EXPECT_NEAR(agi_cost(CircuitParams({2, 1}), {gates::cnot()}, gates::cnot()), 0.0, 1e-15);
  EXPECT_NEAR(agi_cost(CircuitParams({2, 1}), {gates::cnot()}, gates::swap()), 0.75, 1e-15);
  EXPECT_THROW(agi_cost(p, s, identity(8)), ModelError);
}

TEST(AgiCost, BoundedAndTwoPiPeriodic) {
  RandomSource rng(6);
  for (int k = 0; k < 20; ++k) {
    const auto p = CircuitParams::random({2, 2}, rng);
    const SourceGateSet s{haar_unitary(4, rng), haar_unitary(4, rng)};
    const ComplexMatrix t = haar_unitary(4, rng);
    const double h = agi_cost(p, s, t);
    EXPECT_GE(h, -1e-15);
    EXPECT_LE(h, 4.0 / 5.0 + 1e-15);
    CircuitParams q = p;
    q.values()[k % q.values().size()] += 2 * kPi;
    EXPECT_NEAR(agi_cost(q, s, t), h, 1e-13);
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  RandomSource rng(7);
  for (int k = 0; k < 50; ++k) {
    const auto p = CircuitParams::random({2, 2}, rng);
    const SourceGateSet s{haar_unitary(4, rng), haar_unitary(4, rng)};
    const ComplexMatrix t = haar_unitary(4, rng);
    const auto g = parameter_shift_gradient(p, s, t);
    const auto fd = finite_difference(p, s, t);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], fd[i], 1e-5) << "instance " << k << " component " << i;
  }
}

TEST(Gradient, EqualsExplicitShiftedCosts) {
  RandomSource rng(8);
  for (int n : {1, 2, 3}) {
    const CircuitShape shape{n, 2};
    const auto p = CircuitParams::random(shape, rng);
    const SourceGateSet s{haar_unitary(shape.dim(), rng), haar_unitary(shape.dim(), rng)};
    const ComplexMatrix t = haar_unitary(shape.dim(), rng);
    const auto g = parameter_shift_gradient(p, s, t);
    const auto ref = naive_shift(p, s, t);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], ref[i], 1e-12);
    std::vector<double> buf(shape.parameter_count());
    EXPECT_NEAR(AgiObjective(t, s, shape).cost_and_gradient(p, buf), agi_cost(p, s, t), 1e-14);
  }
}

TEST(Gradient, SingleQubitClosedForm) {
  // Identity source, target X: h = 1 - (2 sin^2 a + 1)/3 with a the total X angle.
  CircuitParams p({1, 1});
  p(0, 0, 0) = 0.3;
  const auto g = parameter_shift_gradient(p, {identity(2)}, pauli_matrix("X"));
  EXPECT_NEAR(agi_cost(p, {identity(2)}, pauli_matrix("X")), 1.0 - (2 * std::pow(std::sin(0.3), 2) + 1) / 3, 1e-15);
  EXPECT_NEAR(g[p.index(0, 0, 0)], -(2.0 / 3.0) * std::sin(0.6), 1e-14);
  EXPECT_NEAR(g[p.index(1, 0, 0)], -(2.0 / 3.0) * std::sin(0.6), 1e-14);
}

TEST(Gradient, VanishesAtOptimum) {
  OptimizerConfig cfg;
  cfg.restarts = 1;
  const auto r = vqgo::vqgo(gates::cnot(), {gates::cnot()}, {2, 1}, cfg);
  ASSERT_LT(r.best_cost, 1e-12);
  for (double g : parameter_shift_gradient(r.best_params, {gates::cnot()}, gates::cnot())) EXPECT_NEAR(g, 0.0, 1e-8);
}

TEST(EmulatedObjective, ExactLimitMatchesAgiCost) {
  RandomSource rng(9);
  const CircuitShape shape{2, 2};
  const ComplexMatrix target = gates::cnot();
  const SourceGateSet s{haar_unitary(4, rng), haar_unitary(4, rng)};
  EmulatedObjective emu(target, s, shape);
  const auto p = CircuitParams::random(shape, rng);
  EXPECT_NEAR(emu.cost(p), agi_cost(p, s, target), 1e-12);
  std::vector<double> g(shape.parameter_count());
  emu.cost_and_gradient(p, g);
  const auto ref = parameter_shift_gradient(p, s, target);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], ref[i], 1e-12);
  for (std::size_t m = 0; m < emu.setting_count(); ++m) {
    const auto setting = emu.setting(m);
    EXPECT_NEAR(setting.rho_in.trace().real(), 1.0, 1e-12);
    EXPECT_TRUE(is_hermitian(setting.observable));
  }
}

TEST(EmulatedObjective, ShotNoiseIsUnbiased) {
  RandomSource rng(10);
  const CircuitShape shape{2, 1};
  const SourceGateSet s{gates::cnot()};
  const auto p = CircuitParams::random(shape, rng);
  EmulatedObjective emu(gates::cnot(), s, shape, 1000, 99);
  double mean = 0.0;
  constexpr int kTrials = 40;
  for (int k = 0; k < kTrials; ++k) mean += emu.cost(p) / kTrials;
  EXPECT_NEAR(mean, agi_cost(p, s, gates::cnot()), 0.01);
}

}  // namespace
}  // namespace vqgo
