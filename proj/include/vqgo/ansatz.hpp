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

// The variational gate circuit: layers of single-qubit Euler rotations
// interleaved with fixed source gates,
//
//   U(theta) = L_0 S_1 L_1 S_2 ... S_d L_d,   L_i = u_{i,0} (x) ... (x) u_{i,n-1},
//   u_ij = exp(-i theta_ij0 X) exp(-i theta_ij1 Y) exp(-i theta_ij2 X),
//
// with the leftmost factor applied last in time. The cost is the average gate
// infidelity to a target and its gradient is evaluated with the parameter-shift
// rule. Each rotation is exp(-i theta sigma) (no factor 1/2), so the exact
// shift is pi/4 with unit prefactor: dh/dtheta = h(theta + pi/4) - h(theta - pi/4).
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vqgo/channels.hpp"
#include "vqgo/dfe.hpp"
#include "vqgo/numkit.hpp"

namespace vqgo {

inline constexpr double kParameterShift = kPi / 4.0;

struct CircuitShape {
  int qubits = 1;
  int depth = 1;

  std::size_t parameter_count() const { return 3u * static_cast<std::size_t>(qubits) * static_cast<std::size_t>(depth + 1); }
  Eigen::Index dim() const { return Eigen::Index{1} << qubits; }

  void validate() const {
    if (qubits < 1 || depth < 1) throw ModelError("CircuitShape: need qubits >= 1 and depth >= 1");
    if (qubits > 10) throw ModelError("CircuitShape: qubit count too large for dense simulation");
  }

  friend bool operator==(const CircuitShape&, const CircuitShape&) = default;
};

inline double wrap_angle(double x) {
  constexpr double two_pi = 2.0 * kPi;
  double w = std::fmod(x, two_pi);
  if (w < 0.0) w += two_pi;
  if (w >= two_pi) w = 0.0;
  return w;
}

/// Rotation angles theta_ijk, stored layer-major then qubit then axis.
class CircuitParams {
 public:
  explicit CircuitParams(CircuitShape shape) : shape_(shape), theta_(shape.parameter_count(), 0.0) {
    shape_.validate();
  }

  CircuitParams(CircuitShape shape, std::vector<double> theta) : shape_(shape), theta_(std::move(theta)) {
    shape_.validate();
    if (theta_.size() != shape_.parameter_count()) {
      throw ModelError("CircuitParams: expected " + std::to_string(shape_.parameter_count()) +
                       " angles, got " + std::to_string(theta_.size()));
    }
  }

  /// Every angle drawn uniformly from [0, 2pi).
  static CircuitParams random(CircuitShape shape, RandomSource& rng) {
    CircuitParams p(shape);
    for (auto& t : p.theta_) t = rng.uniform(0.0, 2.0 * kPi);
    return p;
  }

  const CircuitShape& shape() const { return shape_; }

  std::size_t index(int layer, int qubit, int axis) const {
    return (static_cast<std::size_t>(layer) * shape_.qubits + qubit) * 3 + axis;
  }

  double operator()(int layer, int qubit, int axis) const { return theta_.at(index(layer, qubit, axis)); }
  double& operator()(int layer, int qubit, int axis) { return theta_.at(index(layer, qubit, axis)); }

  std::span<const double> values() const { return theta_; }
  std::span<double> values() { return theta_; }

  CircuitParams wrapped() const {
    CircuitParams p = *this;
    for (auto& t : p.theta_) t = wrap_angle(t);
    return p;
  }

 private:
  CircuitShape shape_;
  std::vector<double> theta_;
};

/// Source gates U_source^(1..d); element 0 sits immediately right of layer 0.
using SourceGateSet = std::vector<ComplexMatrix>;

/// One (input state, observable) pair of the measurement-driven cost.
struct MeasurementSetting {
  ComplexMatrix rho_in;
  ComplexMatrix observable;
};

/// exp(-i t0 X) exp(-i t1 Y) exp(-i t2 X).
inline Eigen::Matrix2cd euler_gate(double t0, double t1, double t2) {
  auto rx = [](double t) {
    Eigen::Matrix2cd m;
    m << std::cos(t), -kI * std::sin(t), -kI * std::sin(t), std::cos(t);
    return m;
  };
  Eigen::Matrix2cd ry;
  ry << std::cos(t1), -std::sin(t1), std::sin(t1), std::cos(t1);
  return rx(t0) * ry * rx(t2);
}

inline ComplexMatrix layer_unitary(const CircuitParams& p, int layer) {
  ComplexMatrix out = euler_gate(p(layer, 0, 0), p(layer, 0, 1), p(layer, 0, 2));
  for (int j = 1; j < p.shape().qubits; ++j) {
    out = kron(out, ComplexMatrix(euler_gate(p(layer, j, 0), p(layer, j, 1), p(layer, j, 2))));
  }
  return out;
}

namespace detail {

inline void check_sources(const CircuitShape& shape, const SourceGateSet& sources, const char* where) {
  if (static_cast<int>(sources.size()) != shape.depth) {
    throw ModelError(std::string(where) + ": expected " + std::to_string(shape.depth) + " source gates, got " +
                     std::to_string(sources.size()));
  }
  for (const auto& s : sources) {
    if (s.rows() != shape.dim() || s.cols() != shape.dim()) {
      throw ModelError(std::string(where) + ": source gate dimension does not match the circuit");
    }
  }
}

}  // namespace detail

inline ComplexMatrix build_circuit(const CircuitParams& params, const SourceGateSet& sources) {
  detail::check_sources(params.shape(), sources, "build_circuit");
  ComplexMatrix u = layer_unitary(params, 0);
  for (int i = 1; i <= params.shape().depth; ++i) {
    u = u * sources[i - 1] * layer_unitary(params, i);
  }
  return u;
}

inline double agi_from_overlap(Complex overlap, double dim) {
  return 1.0 - (std::norm(overlap) / dim + 1.0) / (dim + 1.0);
}

/// Average-gate-infidelity objective for a fixed target and source set. The
/// gradient evaluates each shifted cost h(theta +/- pi/4) exactly, reusing the
/// circuit products on either side of the shifted rotation.
class AgiObjective {
 public:
  AgiObjective(ComplexMatrix target, SourceGateSet sources, CircuitShape shape)
      : target_adjoint_(target.adjoint()), sources_(std::move(sources)), shape_(shape) {
    shape_.validate();
    if (target.rows() != shape_.dim() || target.cols() != shape_.dim()) {
      throw ModelError("agi_cost: target dimension does not match the circuit");
    }
    detail::check_sources(shape_, sources_, "agi_cost");
    for (const auto& s : sources_) require_unitary(s, "source gate");
  }

  const CircuitShape& shape() const { return shape_; }
  const SourceGateSet& sources() const { return sources_; }

  double cost(const CircuitParams& params) const {
    check(params);
    return agi_from_overlap((target_adjoint_ * build_circuit(params, sources_)).trace(),
                           static_cast<double>(shape_.dim()));
  }

  /// Parameter-shift gradient, flat in CircuitParams order. Returns h(theta).
  double cost_and_gradient(const CircuitParams& params, std::span<double> grad) const {
    check(params);
    if (grad.size() != shape_.parameter_count()) throw ModelError("gradient buffer has the wrong size");
    const int n = shape_.qubits;
    const int d = shape_.depth;
    const Eigen::Index dim = shape_.dim();
    const double ddim = static_cast<double>(dim);

    std::vector<std::vector<Eigen::Matrix2cd>> gates(d + 1, std::vector<Eigen::Matrix2cd>(n));
    std::vector<ComplexMatrix> layers(d + 1);
    for (int i = 0; i <= d; ++i) {
      for (int j = 0; j < n; ++j) gates[i][j] = euler_gate(params(i, j, 0), params(i, j, 1), params(i, j, 2));
      layers[i] = gates[i][0];
      for (int j = 1; j < n; ++j) layers[i] = kron(layers[i], ComplexMatrix(gates[i][j]));
    }

    // U = prefix[i] * L_i * suffix[i].
    std::vector<ComplexMatrix> prefix(d + 1), suffix(d + 1);
    prefix[0] = identity(dim);
    for (int i = 0; i < d; ++i) prefix[i + 1] = prefix[i] * layers[i] * sources_[i];
    suffix[d] = identity(dim);
    for (int i = d - 1; i >= 0; --i) suffix[i] = sources_[i] * layers[i + 1] * suffix[i + 1];

    double h = 0.0;
    std::vector<Complex> factor(n), before(n + 1), after(n + 1);
    for (int i = 0; i <= d; ++i) {
      // z = Tr[T^dag U] = Tr[env * L_i] with env = suffix * T^dag * prefix.
      const ComplexMatrix env = suffix[i] * target_adjoint_ * prefix[i];
      if (i == 0) h = agi_from_overlap((env * layers[0]).trace(), ddim);

      // Reduce env to a 2x2 environment per qubit j: z = sum_ab E_j(a,b) u_j(b,a).
      std::vector<Eigen::Matrix2cd> qubit_env(n, Eigen::Matrix2cd::Zero());
      for (Eigen::Index a = 0; a < dim; ++a) {
        for (Eigen::Index b = 0; b < dim; ++b) {
          const Complex m = env(a, b);
          if (m == Complex(0.0)) continue;
          for (int q = 0; q < n; ++q) {
            const int shift = n - 1 - q;
            factor[q] = gates[i][q]((b >> shift) & 1, (a >> shift) & 1);
          }
          before[0] = 1.0;
          for (int q = 0; q < n; ++q) before[q + 1] = before[q] * factor[q];
          after[n] = 1.0;
          for (int q = n - 1; q >= 0; --q) after[q] = after[q + 1] * factor[q];
          for (int q = 0; q < n; ++q) {
            const int shift = n - 1 - q;
            qubit_env[q]((a >> shift) & 1, (b >> shift) & 1) += m * before[q] * after[q + 1];
          }
        }
      }

      for (int j = 0; j < n; ++j) {
        const Eigen::Matrix2cd& e = qubit_env[j];
        for (int k = 0; k < 3; ++k) {
          double shifted[2];
          for (int s = 0; s < 2; ++s) {
            double angles[3] = {params(i, j, 0), params(i, j, 1), params(i, j, 2)};
            angles[k] += s == 0 ? kParameterShift : -kParameterShift;
            const Eigen::Matrix2cd u = euler_gate(angles[0], angles[1], angles[2]);
            const Complex z = e(0, 0) * u(0, 0) + e(0, 1) * u(1, 0) + e(1, 0) * u(0, 1) + e(1, 1) * u(1, 1);
            shifted[s] = agi_from_overlap(z, ddim);
          }
          grad[params.index(i, j, k)] = shifted[0] - shifted[1];
        }
      }
    }
    return h;
  }

  std::vector<double> gradient(const CircuitParams& params) const {
    std::vector<double> g(shape_.parameter_count());
    cost_and_gradient(params, g);
    return g;
  }

 private:
  void check(const CircuitParams& params) const {
    if (!(params.shape() == shape_)) throw ModelError("circuit parameters do not match the circuit shape");
  }

  ComplexMatrix target_adjoint_;
  SourceGateSet sources_;
  CircuitShape shape_;
};

/// h(theta) = agi(target, U(theta)).
inline double agi_cost(const CircuitParams& params, const SourceGateSet& sources, const ComplexMatrix& target) {
  return AgiObjective(target, sources, params.shape()).cost(params);
}

inline std::vector<double> parameter_shift_gradient(const CircuitParams& params, const SourceGateSet& sources,
                                                    const ComplexMatrix& target) {
  return AgiObjective(target, sources, params.shape()).gradient(params);
}

/// Measurement-driven cost: h is a linear function of expectation values
/// E_m = Tr[O_m U rho_m U^dag] over the full-support fidelity-estimation
/// settings of the target, so the gradient is
///   dh/dtheta = (E(theta + pi/4) - E(theta - pi/4)) . grad_E h.
/// With shots unset the expectations are exact and the cost equals agi_cost.
class EmulatedObjective {
 public:
  EmulatedObjective(const ComplexMatrix& target, SourceGateSet sources, CircuitShape shape, Shots shots = std::nullopt,
                    std::uint64_t seed = 0)
      : sources_(std::move(sources)), shape_(shape), shots_(shots), rng_(seed) {
    shape_.validate();
    if (target.rows() != shape_.dim()) throw ModelError("emulated cost: target dimension mismatch");
    detail::check_sources(shape_, sources_, "emulated cost");
    if (shots_ && *shots_ < 1) throw ModelError("emulated cost: shots must be >= 1");

    const DfePlan plan = dfe_plan(ptm(target), DfeMode::full_support);
    const double d = static_cast<double>(shape_.dim());
    for (const auto& entry : plan.entries) {
      const ComplexMatrix obs = pauli_matrix(entry.i);
      const auto basis = pauli_eigenbasis(entry.j);
      for (const auto& e : basis) {
        states_.push_back(e.state);
        observables_.push_back(obs);
        // h = 1 - (d * sum_e w_e Rhat_e / R_e + 1)/(d + 1), Rhat_e = sum_k lambda_k E_ek / d.
        cost_slope_.push_back(-(d / (d + 1.0)) * entry.weight * e.eigenvalue / (d * entry.target_value));
      }
    }
    cost_offset_ = 1.0 - 1.0 / (d + 1.0);
  }

  std::size_t setting_count() const { return states_.size(); }

  MeasurementSetting setting(std::size_t m) const {
    return {states_.at(m) * states_.at(m).adjoint(), observables_.at(m)};
  }

  std::vector<double> expectations(const ComplexMatrix& u) {
    std::vector<double> e(states_.size());
    for (std::size_t m = 0; m < states_.size(); ++m) {
      const ComplexVector out = u * states_[m];
      const double exact = out.dot(observables_[m] * out).real();
      e[m] = shots_ ? detail::sample_pauli_mean(exact, *shots_, rng_) : exact;
    }
    return e;
  }

  const std::vector<double>& cost_gradient_wrt_expectations() const { return cost_slope_; }

  double cost_from_expectations(std::span<const double> e) const {
    double h = cost_offset_;
    for (std::size_t m = 0; m < e.size(); ++m) h += cost_slope_[m] * e[m];
    return h;
  }

  double cost(const CircuitParams& params) { return cost_from_expectations(expectations(build_circuit(params, sources_))); }

  double cost_and_gradient(const CircuitParams& params, std::span<double> grad) {
    if (grad.size() != shape_.parameter_count()) throw ModelError("gradient buffer has the wrong size");
    const double h = cost(params);
    CircuitParams shifted = params;
    for (std::size_t p = 0; p < grad.size(); ++p) {
      const double base = params.values()[p];
      shifted.values()[p] = base + kParameterShift;
      const auto plus = expectations(build_circuit(shifted, sources_));
      shifted.values()[p] = base - kParameterShift;
      const auto minus = expectations(build_circuit(shifted, sources_));
      shifted.values()[p] = base;
      double g = 0.0;
      for (std::size_t m = 0; m < plus.size(); ++m) g += (plus[m] - minus[m]) * cost_slope_[m];
      grad[p] = g;
    }
    return h;
  }

 private:
  SourceGateSet sources_;
  CircuitShape shape_;
  Shots shots_;
  RandomSource rng_;
  std::vector<ComplexVector> states_;
  std::vector<ComplexMatrix> observables_;
  std::vector<double> cost_slope_;
  double cost_offset_ = 0.0;
};

}  // namespace vqgo
