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

// Cross-resonance device models and the gates built from them.
//
// Frequencies are ordinary frequencies in MHz; Hamiltonians are returned in
// rad/ns using 2*pi*1e-3 rad/ns per MHz. |1> is the excited state, so
// sigma^- = |0><1| and sigma^+ sigma^- = |1><1|.
//
// Two-qubit register: |q1 q2> with the driven qubit Q1 leftmost.
// Five-qubit register: |Q1 Q2 Q3 Q4 Q0> with the measurement qubit Q0 as the
// last (least significant) factor.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqgo/channels.hpp"
#include "vqgo/numkit.hpp"

namespace vqgo {

inline constexpr double kRadPerNsPerMhz = 2.0 * kPi * 1e-3;

struct CrossResonancePair {
  double delta_mhz = 0.0;
  double g_mhz = 0.0;
  double eps = 0.0;
  double phi_rad = 0.0;

  void validate() const {
    if (!std::isfinite(delta_mhz) || !std::isfinite(g_mhz) || !std::isfinite(eps) || !std::isfinite(phi_rad)) {
      throw ModelError("CrossResonancePair: parameters must be finite");
    }
    if (eps < 0.0) throw ModelError("CrossResonancePair: crosstalk amplitude eps must be >= 0");
  }
};

struct DriveSpec {
  double omega_mhz = 0.0;
  double t_ns = 0.0;
};

struct FourQubitDevice {
  std::array<CrossResonancePair, 4> qubits{};

  void validate() const {
    for (const auto& q : qubits) q.validate();
  }
};

namespace gates {

inline ComplexMatrix sigma_minus() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}

inline ComplexMatrix sigma_plus() { return sigma_minus().transpose(); }

/// Single-qubit operator `op` on qubit q of an n-qubit register.
inline ComplexMatrix embed(const ComplexMatrix& op, int qubit, int qubits) {
  ComplexMatrix out = qubit == 0 ? op : identity(2);
  for (int q = 1; q < qubits; ++q) out = kron(out, q == qubit ? op : identity(2));
  return out;
}

/// Permutation matrix of a basis map b -> f(b).
template <class Map>
ComplexMatrix permutation(Eigen::Index dim, Map f) {
  ComplexMatrix p = ComplexMatrix::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) p(f(b), b) = 1.0;
  return p;
}

inline ComplexMatrix cnot(int control, int target, int qubits) {
  const Eigen::Index dim = Eigen::Index{1} << qubits;
  const int cshift = qubits - 1 - control;
  const int tshift = qubits - 1 - target;
  return permutation(dim, [&](Eigen::Index b) { return ((b >> cshift) & 1) ? b ^ (Eigen::Index{1} << tshift) : b; });
}

inline ComplexMatrix cnot() { return cnot(0, 1, 2); }

inline ComplexMatrix swap() {
  return permutation(4, [](Eigen::Index b) { return ((b & 1) << 1) | ((b >> 1) & 1); });
}

inline ComplexMatrix hadamard() {
  ComplexMatrix h(2, 2);
  const double r = 1.0 / std::sqrt(2.0);
  h << r, r, r, -r;
  return h;
}

inline ComplexMatrix phase_s() {
  ComplexMatrix s = identity(2);
  s(1, 1) = kI;
  return s;
}

/// exp(-i angle sigma) for a single-qubit Pauli sigma.
inline ComplexMatrix pauli_rotation(std::uint8_t letter, double angle) {
  return std::cos(angle) * identity(2) - kI * std::sin(angle) * single_pauli(letter);
}

}  // namespace gates

inline ComplexMatrix cr_hamiltonian(const CrossResonancePair& pair, double omega_mhz) {
  pair.validate();
  using namespace gates;
  const ComplexMatrix id = identity(2);
  const ComplexMatrix sm = sigma_minus();
  const ComplexMatrix sp = sigma_plus();
  const ComplexMatrix x = single_pauli(1);
  const Complex crosstalk_minus = pair.eps * std::exp(-kI * pair.phi_rad);
  const Complex crosstalk_plus = pair.eps * std::exp(kI * pair.phi_rad);

  ComplexMatrix h = pair.delta_mhz * kron(sp * sm, id) + pair.g_mhz * (kron(sp, sm) + kron(sm, sp)) +
                    0.5 * omega_mhz * (kron(x, id) + crosstalk_minus * kron(id, sm) + crosstalk_plus * kron(id, sp));
  return kRadPerNsPerMhz * h;
}

inline ComplexMatrix cr_gate(const CrossResonancePair& pair, const DriveSpec& drive) {
  if (!(drive.t_ns >= 0.0)) throw ModelError("cr_gate: gate time must be >= 0");
  return expm_hermitian(cr_hamiltonian(pair, drive.omega_mhz), drive.t_ns);
}

/// Four simultaneous CR drives on data qubits Q1..Q4 (register factors 0..3)
/// coupled to the measurement qubit Q0 (factor 4).
inline ComplexMatrix four_cr_hamiltonian(const FourQubitDevice& dev, const std::array<double, 4>& omegas_mhz) {
  dev.validate();
  using namespace gates;
  constexpr int n = 5;
  constexpr int q0 = 4;
  const ComplexMatrix sm0 = embed(sigma_minus(), q0, n);
  const ComplexMatrix sp0 = embed(sigma_plus(), q0, n);
  ComplexMatrix h = ComplexMatrix::Zero(32, 32);
  for (int i = 0; i < 4; ++i) {
    const auto& p = dev.qubits[i];
    const ComplexMatrix smi = embed(sigma_minus(), i, n);
    const ComplexMatrix spi = embed(sigma_plus(), i, n);
    h += p.delta_mhz * (spi * smi);
    h += p.g_mhz * (sp0 * smi + spi * sm0);
    h += 0.5 * omegas_mhz[i] *
         ((spi + smi) + p.eps * (std::exp(-kI * p.phi_rad) * sm0 + std::exp(kI * p.phi_rad) * sp0));
  }
  return kRadPerNsPerMhz * h;
}

inline ComplexMatrix four_cr_gate(const FourQubitDevice& dev, const std::array<double, 4>& omegas_mhz, double t_ns) {
  if (!(t_ns >= 0.0)) throw ModelError("four_cr_gate: gate time must be >= 0");
  return expm_hermitian(four_cr_hamiltonian(dev, omegas_mhz), t_ns);
}

/// Fixed single-qubit layers of the echoed two-pulse CNOT,
///   TPCX = A * U_CR(-Omega) * B * U_CR(+Omega) * C.
/// In the ideal limit U_CR(+/-Omega) -> exp(+/- i pi/8 Z(x)X) the product is
/// exp(-i pi/4) CNOT.
struct TpcxFrame {
  ComplexMatrix a;
  ComplexMatrix b;
  ComplexMatrix c;
};

inline const TpcxFrame& tpcx_frame() {
  static const TpcxFrame frame = [] {
    using namespace gates;
    const ComplexMatrix x = single_pauli(1);
    // A * (X (x) I) = exp(-i pi/4 Z) (x) exp(-i pi/4 X), the frame that turns
    // exp(i pi/4 ZX) into CNOT.
    TpcxFrame f;
    f.a = kron(pauli_rotation(3, kPi / 4) * x, pauli_rotation(1, kPi / 4));
    f.b = kron(x, identity(2));
    f.c = identity(4);
    return f;
  }();
  return frame;
}

/// Echoed two-pulse CNOT from a CR pair driven with +Omega then -Omega.
inline ComplexMatrix tpcx_from_pulses(const ComplexMatrix& cr_plus, const ComplexMatrix& cr_minus) {
  const auto& f = tpcx_frame();
  return f.a * cr_minus * f.b * cr_plus * f.c;
}

inline ComplexMatrix tpcx(const CrossResonancePair& pair, double omega_mhz, double t_ns) {
  return tpcx_from_pulses(cr_gate(pair, {omega_mhz, t_ns}), cr_gate(pair, {-omega_mhz, t_ns}));
}

/// Four commuting CNOTs, control data qubit Q_i (factor i-1), target Q0 (factor 4).
inline ComplexMatrix syndrome_target() {
  return gates::permutation(32, [](Eigen::Index b) {
    const int parity = __builtin_popcountll(static_cast<unsigned long long>(b >> 1)) & 1;
    return b ^ parity;
  });
}

inline void to_json(nlohmann::json& j, const CrossResonancePair& p) {
  j = {{"delta_mhz", p.delta_mhz}, {"g_mhz", p.g_mhz}, {"eps", p.eps}, {"phi_rad", p.phi_rad}};
}

inline void from_json(const nlohmann::json& j, CrossResonancePair& p) {
  p.delta_mhz = j.at("delta_mhz").get<double>();
  p.g_mhz = j.at("g_mhz").get<double>();
  p.eps = j.value("eps", 0.0);
  p.phi_rad = j.value("phi_rad", 0.0);
  p.validate();
}

inline void to_json(nlohmann::json& j, const FourQubitDevice& d) {
  j = {{"qubits", nlohmann::json::array()}};
  for (const auto& q : d.qubits) j["qubits"].push_back(q);
}

inline void from_json(const nlohmann::json& j, FourQubitDevice& d) {
  const auto& qs = j.at("qubits");
  if (!qs.is_array() || qs.size() != 4) throw ModelError("FourQubitDevice: expected exactly 4 qubit entries");
  for (std::size_t i = 0; i < 4; ++i) d.qubits[i] = qs[i].get<CrossResonancePair>();
}

}  // namespace vqgo
