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

// Shared oracles for the unit tests. Each is an independent, deliberately
// naive implementation of something the library computes another way.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "vqgo/numkit.hpp"

namespace vqgo::testing {

/// exp(-i h t) by scaling and squaring of a truncated Taylor series.
inline ComplexMatrix taylor_expm(const ComplexMatrix& h, double t, int terms = 40) {
  const ComplexMatrix a = -kI * t * h;
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (std::ldexp(norm, -squarings) > 0.5) ++squarings;
  const ComplexMatrix scaled = a / std::ldexp(1.0, squarings);
  ComplexMatrix term = identity(h.rows());
  ComplexMatrix sum = term;
  for (int k = 1; k < terms; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

/// Element-by-element Kronecker product.
inline ComplexMatrix naive_kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      out(i, j) = a(i / b.rows(), j / b.cols()) * b(i % b.rows(), j % b.cols());
    }
  }
  return out;
}

inline ComplexMatrix random_hermitian(Eigen::Index dim, RandomSource& rng) {
  ComplexMatrix m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = Complex(rng.normal(), rng.normal());
  }
  return (m + m.adjoint()) / 2.0;
}

/// Haar-averaged state fidelity |<psi|u^dag v|psi>|^2 by direct sampling.
inline double haar_sampled_agf(const ComplexMatrix& u, const ComplexMatrix& v, int samples, RandomSource& rng) {
  double acc = 0.0;
  for (int s = 0; s < samples; ++s) {
    const ComplexVector psi = haar_state(u.rows(), rng);
    acc += std::norm(psi.dot(u.adjoint() * v * psi));
  }
  return acc / samples;
}

}  // namespace vqgo::testing
