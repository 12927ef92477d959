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

// Two-qubit representation-power analysis: Cartan (KAK) coordinates, operator
// Schmidt spectrum, operator entanglement and entangling power.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "vqgo/channels.hpp"
#include "vqgo/devices.hpp"
#include "vqgo/numkit.hpp"

namespace vqgo {

/// Coordinates (c_x, c_y, c_z) of exp(i(c_x XX + c_y YY + c_z ZZ)).
///
/// cartan_coordinates returns the Weyl-chamber representative
/// pi/4 >= c_x >= c_y >= |c_z|, with c_z >= 0 whenever c_x = pi/4. A negative
/// c_z marks the mirror-image class, which is not locally equivalent to the
/// class with +|c_z|.
struct CartanCoordinates {
  double c_x = 0.0;
  double c_y = 0.0;
  double c_z = 0.0;
};

inline constexpr double kCartanPhaseTolerance = 1e-9;

inline ComplexMatrix canonical_gate(const CartanCoordinates& c) {
  const ComplexMatrix xx = pauli_matrix("XX");
  const ComplexMatrix yy = pauli_matrix("YY");
  const ComplexMatrix zz = pauli_matrix("ZZ");
  auto factor = [](const ComplexMatrix& p, double a) { return ComplexMatrix(std::cos(a) * identity(4) + kI * std::sin(a) * p); };
  return factor(xx, c.c_x) * factor(yy, c.c_y) * factor(zz, c.c_z);
}

/// Columns are the magic (Bell-type) basis in which local gates are real
/// orthogonal and canonical gates are diagonal.
inline ComplexMatrix magic_basis() {
  const double r = 1.0 / std::sqrt(2.0);
  ComplexMatrix q(4, 4);
  q << r, 0, 0, kI * r,
       0, kI * r, r, 0,
       0, kI * r, -r, 0,
       r, 0, 0, -kI * r;
  return q;
}

namespace detail {

// Local symmetries: each coordinate is defined mod pi/2, coordinates may be
// permuted, and any two may change sign together.
inline CartanCoordinates canonicalize(std::array<double, 3> c) {
  constexpr double quarter = kPi / 4.0;
  constexpr double half = kPi / 2.0;
  for (auto& v : c) {
    v = std::fmod(v, half);
    if (v > quarter + kCartanPhaseTolerance) v -= half;
    if (v < -quarter + kCartanPhaseTolerance) v += half;
  }
  std::sort(c.begin(), c.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
  if (c[0] < 0) {
    c[0] = -c[0];
    c[2] = -c[2];
  }
  if (c[1] < 0) {
    c[1] = -c[1];
    c[2] = -c[2];
  }
  if (std::abs(c[0] - quarter) < kCartanPhaseTolerance) {
    c[0] = quarter;
    c[2] = std::abs(c[2]);
  }
  for (auto& v : c) {
    if (std::abs(v) < kCartanPhaseTolerance) v = 0.0;
  }
  return {c[0], c[1], c[2]};
}

}  // namespace detail

/// Local-equivalence class of a two-qubit unitary, from the spectrum of
/// M^T M with M the gate in the magic basis.
inline CartanCoordinates cartan_coordinates(const ComplexMatrix& u) {
  if (u.rows() != 4 || u.cols() != 4) throw ModelError("cartan_coordinates: expected a 4x4 matrix");
  require_unitary(u, "cartan_coordinates");
  const ComplexMatrix su = u * std::pow(u.determinant(), -0.25);
  const ComplexMatrix q = magic_basis();
  const ComplexMatrix m = q.adjoint() * su * q;
  const ComplexMatrix mm = m.transpose() * m;
  Eigen::ComplexEigenSolver<ComplexMatrix> solver(mm, false);
  std::array<double, 4> lambda{};
  for (int k = 0; k < 4; ++k) lambda[k] = std::arg(solver.eigenvalues()(k)) / 2.0;
  // Diagonal phases of a canonical gate are (a-b+c, -a+b+c, a+b-c, -a-b-c).
  return detail::canonicalize({(lambda[0] + lambda[2]) / 2.0, (lambda[1] + lambda[2]) / 2.0,
                               (lambda[0] + lambda[1]) / 2.0});
}

/// Coefficients lambda_i (descending) of U = sum_i sqrt(lambda_i) A_i (x) B_i
/// with Hilbert-Schmidt orthonormal A_i, B_i; sum lambda_i = Tr[U^dag U] = 4.
struct SchmidtSpectrum {
  std::vector<double> lambda;
};

inline SchmidtSpectrum operator_schmidt(const ComplexMatrix& u) {
  if (u.rows() != 4 || u.cols() != 4) throw ModelError("operator_schmidt: expected a 4x4 matrix");
  // Realignment: R[(a a'), (b b')] = U[(a b), (a' b')], qubit A is the high bit.
  ComplexMatrix r(4, 4);
  for (int a = 0; a < 2; ++a) {
    for (int ap = 0; ap < 2; ++ap) {
      for (int b = 0; b < 2; ++b) {
        for (int bp = 0; bp < 2; ++bp) r(2 * a + ap, 2 * b + bp) = u(2 * a + b, 2 * ap + bp);
      }
    }
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(r);
  SchmidtSpectrum s;
  for (int k = 0; k < 4; ++k) s.lambda.push_back(svd.singularValues()(k) * svd.singularValues()(k));
  std::sort(s.lambda.begin(), s.lambda.end(), std::greater<>());
  return s;
}

/// E(U) = 1 - sum lambda_i^2 / 16 (subsystem dimension 2).
inline double operator_entanglement(const ComplexMatrix& u) {
  const auto s = operator_schmidt(u);
  double sq = 0.0;
  for (double l : s.lambda) sq += l * l;
  return 1.0 - sq / 16.0;
}

/// e_p(U) = (2/3)^2 [E(U) + E(U S) - E(S)], S = SWAP.
inline double entangling_power(const ComplexMatrix& u) {
  const ComplexMatrix s = gates::swap();
  return (4.0 / 9.0) * (operator_entanglement(u) + operator_entanglement(u * s) - operator_entanglement(s));
}

/// Linear entropy 1 - Tr[rho_A^2] of a two-qubit pure state.
inline double linear_entropy(const ComplexVector& psi) {
  const ComplexMatrix rho = psi * psi.adjoint();
  const ComplexMatrix reduced = partial_trace(rho, {0}, {2, 2});
  return 1.0 - (reduced * reduced).trace().real();
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

inline MonteCarloEstimate entangling_power_mc_estimate(const ComplexMatrix& u, std::size_t samples, RandomSource& rng) {
  if (samples < 1) throw ModelError("entangling_power_mc: samples must be >= 1");
  if (u.rows() != 4 || u.cols() != 4) throw ModelError("entangling_power_mc: expected a 4x4 matrix");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const ComplexVector a = haar_state(2, rng);
    const ComplexVector b = haar_state(2, rng);
    ComplexVector product(4);
    product << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
    const double e = linear_entropy(u * product);
    sum += e;
    sum_sq += e * e;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = samples > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n), samples};
}

inline double entangling_power_mc(const ComplexMatrix& u, std::size_t samples, RandomSource& rng) {
  return entangling_power_mc_estimate(u, samples, rng).mean;
}

}  // namespace vqgo
