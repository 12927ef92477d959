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

// Dense complex linear algebra for few-qubit simulation.
//
// Qubit ordering: qubit 0 is the leftmost (most significant) Kronecker factor,
// so basis index b of an n-qubit register holds qubit q in bit (n-1-q).
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vqgo/errors.hpp"

namespace vqgo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

inline constexpr double kUnitaryTolerance = 1e-10;
inline constexpr double kHermitianTolerance = 1e-12;

inline ComplexMatrix identity(Eigen::Index dim) { return ComplexMatrix::Identity(dim, dim); }

inline double max_abs(const ComplexMatrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ModelError("max_abs_diff: shape mismatch");
  }
  return max_abs(a - b);
}

inline ComplexMatrix dagger(const ComplexMatrix& a) { return a.adjoint(); }

inline bool is_square(const ComplexMatrix& a) { return a.rows() == a.cols() && a.rows() >= 1; }

inline bool is_unitary(const ComplexMatrix& u, double tol = kUnitaryTolerance) {
  return is_square(u) && max_abs(u.adjoint() * u - identity(u.rows())) < tol;
}

inline bool is_hermitian(const ComplexMatrix& h, double tol = kHermitianTolerance) {
  return is_square(h) && max_abs(h - h.adjoint()) < tol;
}

inline void require_square(const ComplexMatrix& a, const char* where) {
  if (!is_square(a)) throw ModelError(std::string(where) + ": matrix must be square with dim >= 1");
}

inline void require_unitary(const ComplexMatrix& u, const char* where) {
  if (!is_unitary(u)) throw ModelError(std::string(where) + ": matrix is not unitary");
}

/// Number of qubits n for a 2^n-dimensional operator; throws otherwise.
inline int qubit_count(Eigen::Index dim) {
  int n = 0;
  Eigen::Index d = 1;
  while (d < dim) {
    d *= 2;
    ++n;
  }
  if (d != dim) throw ModelError("dimension " + std::to_string(dim) + " is not a power of two");
  return n;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline ComplexMatrix kron_all(std::span<const ComplexMatrix> factors) {
  if (factors.empty()) return identity(1);
  ComplexMatrix out = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) out = kron(out, factors[i]);
  return out;
}

/// exp(-i h t) for Hermitian h, via eigendecomposition.
inline ComplexMatrix expm_hermitian(const ComplexMatrix& h, double t) {
  require_square(h, "expm_hermitian");
  if (!is_hermitian(h)) throw ModelError("expm_hermitian: generator is not Hermitian");
  if (!(t >= 0.0)) throw ModelError("expm_hermitian: evolution time must be >= 0");
  if (t == 0.0) return identity(h.rows());
  // Symmetrize so the solver sees an exactly Hermitian input.
  const ComplexMatrix hs = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hs);
  const auto& v = solver.eigenvectors();
  ComplexVector phases(hs.rows());
  for (Eigen::Index k = 0; k < hs.rows(); ++k) {
    phases(k) = std::exp(-kI * solver.eigenvalues()(k) * t);
  }
  return v * phases.asDiagonal() * v.adjoint();
}

/// Reduced density matrix over the subsystems listed in `keep`.
inline ComplexMatrix partial_trace(const ComplexMatrix& rho, std::span<const int> keep,
                                   std::span<const int> dims) {
  require_square(rho, "partial_trace");
  if (keep.empty()) throw ModelError("partial_trace: keep set must be non-empty");
  long total = 1;
  for (int d : dims) {
    if (d < 1) throw ModelError("partial_trace: subsystem dimensions must be positive");
    total *= d;
  }
  if (total != rho.rows()) throw ModelError("partial_trace: product of dims does not match rho");
  const int m = static_cast<int>(dims.size());
  std::vector<bool> kept(m, false);
  for (int k : keep) {
    if (k < 0 || k >= m) throw ModelError("partial_trace: subsystem index out of range");
    if (kept[k]) throw ModelError("partial_trace: duplicate subsystem index");
    kept[k] = true;
  }

  // Strides of the full register (subsystem 0 most significant) and of the kept register.
  std::vector<long> stride(m, 1), kept_stride(m, 0);
  for (int s = m - 2; s >= 0; --s) stride[s] = stride[s + 1] * dims[s + 1];
  long kept_dim = 1;
  for (int s = m - 1; s >= 0; --s) {
    if (kept[s]) {
      kept_stride[s] = kept_dim;
      kept_dim *= dims[s];
    }
  }

  auto split = [&](long index, long& kept_index, long& traced_key) {
    kept_index = 0;
    traced_key = 0;
    for (int s = 0; s < m; ++s) {
      const long digit = (index / stride[s]) % dims[s];
      if (kept[s]) {
        kept_index += digit * kept_stride[s];
      } else {
        traced_key = traced_key * dims[s] + digit;
      }
    }
  };

  std::vector<long> kept_of(total), traced_of(total);
  for (long i = 0; i < total; ++i) split(i, kept_of[i], traced_of[i]);

  ComplexMatrix out = ComplexMatrix::Zero(kept_dim, kept_dim);
  for (long r = 0; r < total; ++r) {
    for (long c = 0; c < total; ++c) {
      if (traced_of[r] == traced_of[c]) out(kept_of[r], kept_of[c]) += rho(r, c);
    }
  }
  return out;
}

inline ComplexMatrix partial_trace(const ComplexMatrix& rho, std::initializer_list<int> keep,
                                   std::initializer_list<int> dims) {
  return partial_trace(rho, std::span<const int>(keep.begin(), keep.size()),
                       std::span<const int>(dims.begin(), dims.size()));
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seeded, splittable random stream. Identical seeds give identical streams;
/// split(k) derives an independent child whose seed depends only on (seed, k).
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  RandomSource split(std::uint64_t stream) const {
    return RandomSource(splitmix64(seed_ ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
  }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal() { return normal_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Haar-random pure state: normalized vector of i.i.d. complex standard normals.
inline ComplexVector haar_state(Eigen::Index dim, RandomSource& rng) {
  if (dim < 1) throw ModelError("haar_state: dim must be >= 1");
  ComplexVector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double re = rng.normal();
    const double im = rng.normal();
    v(i) = Complex(re, im);
  }
  return v / v.norm();
}

/// Haar-random unitary (QR of a complex Ginibre matrix with the R-diagonal phases removed).
inline ComplexMatrix haar_unitary(Eigen::Index dim, RandomSource& rng) {
  if (dim < 1) throw ModelError("haar_unitary: dim must be >= 1");
  ComplexMatrix g(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      g(i, j) = Complex(re, im);
    }
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < dim; ++k) {
    const Complex d = r(k, k);
    q.col(k) *= std::abs(d) > 0 ? d / std::abs(d) : Complex(1.0);
  }
  return q;
}

/// Haar-random element of SU(dim): haar_unitary rescaled to unit determinant.
inline ComplexMatrix haar_special_unitary(Eigen::Index dim, RandomSource& rng) {
  ComplexMatrix u = haar_unitary(dim, rng);
  const Complex det = u.determinant();
  return u * std::pow(det, -1.0 / static_cast<double>(dim));
}

}  // namespace vqgo
