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

// Pauli algebra, average gate fidelity and Pauli transfer matrices of unitary
// channels.
//
// Pauli labels are indexed in base 4 with qubit 0 as the most significant digit
// and letter digits I=0, X=1, Y=2, Z=3.
#pragma once

#include <cstdint>
#include <iomanip>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "vqgo/numkit.hpp"

namespace vqgo {

class PauliLabel {
 public:
  PauliLabel() = default;

  /// Letters over {I,X,Y,Z}; qubit 0 first.
  explicit PauliLabel(std::string_view letters) {
    if (letters.empty()) throw ModelError("PauliLabel: empty label");
    digits_.reserve(letters.size());
    for (char c : letters) {
      switch (c) {
        case 'I': digits_.push_back(0); break;
        case 'X': digits_.push_back(1); break;
        case 'Y': digits_.push_back(2); break;
        case 'Z': digits_.push_back(3); break;
        default: throw ModelError(std::string("PauliLabel: invalid letter '") + c + "'");
      }
    }
  }

  static PauliLabel from_index(std::uint64_t index, int qubits) {
    if (qubits < 1) throw ModelError("PauliLabel: qubit count must be >= 1");
    if (qubits < 32 && index >= (std::uint64_t{1} << (2 * qubits))) {
      throw ModelError("PauliLabel: index out of range");
    }
    PauliLabel label;
    label.digits_.assign(qubits, 0);
    for (int q = qubits - 1; q >= 0; --q) {
      label.digits_[q] = static_cast<std::uint8_t>(index & 3u);
      index >>= 2;
    }
    return label;
  }

  int qubits() const { return static_cast<int>(digits_.size()); }
  std::uint8_t letter(int q) const { return digits_.at(q); }

  std::uint64_t index() const {
    std::uint64_t idx = 0;
    for (auto d : digits_) idx = (idx << 2) | d;
    return idx;
  }

  bool is_identity() const {
    for (auto d : digits_) {
      if (d != 0) return false;
    }
    return true;
  }

  std::string str() const {
    static constexpr char kLetters[] = {'I', 'X', 'Y', 'Z'};
    std::string s;
    for (auto d : digits_) s.push_back(kLetters[d]);
    return s;
  }

  friend bool operator==(const PauliLabel&, const PauliLabel&) = default;

 private:
  std::vector<std::uint8_t> digits_;
};

inline ComplexMatrix single_pauli(std::uint8_t letter) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  switch (letter) {
    case 0: m(0, 0) = 1.0; m(1, 1) = 1.0; break;
    case 1: m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case 2: m(0, 1) = -kI; m(1, 0) = kI; break;
    case 3: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    default: throw ModelError("single_pauli: letter out of range");
  }
  return m;
}

inline ComplexMatrix pauli_matrix(const PauliLabel& label) {
  ComplexMatrix out = single_pauli(label.letter(0));
  for (int q = 1; q < label.qubits(); ++q) out = kron(out, single_pauli(label.letter(q)));
  return out;
}

inline ComplexMatrix pauli_matrix(std::string_view letters) { return pauli_matrix(PauliLabel(letters)); }

namespace detail {

// Pauli strings are monomial: row b has its single nonzero entry at column
// b ^ flip_mask with value row_phase(b).
inline std::uint64_t pauli_flip_mask(const PauliLabel& p) {
  std::uint64_t mask = 0;
  const int n = p.qubits();
  for (int q = 0; q < n; ++q) {
    const auto l = p.letter(q);
    if (l == 1 || l == 2) mask |= std::uint64_t{1} << (n - 1 - q);
  }
  return mask;
}

inline Complex pauli_row_phase(const PauliLabel& p, std::uint64_t row) {
  Complex phase = 1.0;
  const int n = p.qubits();
  for (int q = 0; q < n; ++q) {
    const bool bit = (row >> (n - 1 - q)) & 1u;
    switch (p.letter(q)) {
      case 2: phase *= bit ? kI : -kI; break;
      case 3: if (bit) phase = -phase; break;
      default: break;
    }
  }
  return phase;
}

/// Tr[sigma_p * a] in O(D).
inline Complex pauli_trace_product(const PauliLabel& p, const ComplexMatrix& a) {
  const std::uint64_t mask = pauli_flip_mask(p);
  Complex acc = 0.0;
  for (Eigen::Index b = 0; b < a.rows(); ++b) {
    const auto c = static_cast<Eigen::Index>(static_cast<std::uint64_t>(b) ^ mask);
    acc += pauli_row_phase(p, static_cast<std::uint64_t>(b)) * a(c, b);
  }
  return acc;
}

}  // namespace detail

/// (|Tr[u^dag v]|^2 / D + 1) / (D + 1).
inline double agf_unitary(const ComplexMatrix& u, const ComplexMatrix& v) {
  require_square(u, "agf_unitary");
  require_square(v, "agf_unitary");
  if (u.rows() != v.rows()) throw ModelError("agf_unitary: dimension mismatch");
  const double d = static_cast<double>(u.rows());
  const Complex overlap = (u.adjoint() * v).trace();
  return (std::norm(overlap) / d + 1.0) / (d + 1.0);
}

inline double agi(const ComplexMatrix& u, const ComplexMatrix& v) { return 1.0 - agf_unitary(u, v); }

struct PauliTransferMatrix {
  int qubits = 0;
  RealMatrix r;

  Eigen::Index size() const { return r.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return r(i, j); }
};

/// R_ij = Tr[sigma_i u sigma_j u^dag] / D.
inline PauliTransferMatrix ptm(const ComplexMatrix& u) {
  require_square(u, "ptm");
  const int n = qubit_count(u.rows());
  if (n < 1) throw ModelError("ptm: need at least one qubit");
  const double d = static_cast<double>(u.rows());
  const std::uint64_t count = std::uint64_t{1} << (2 * n);
  std::vector<PauliLabel> labels;
  labels.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) labels.push_back(PauliLabel::from_index(k, n));

  PauliTransferMatrix out{n, RealMatrix(count, count)};
  const ComplexMatrix ud = u.adjoint();
  for (std::uint64_t j = 0; j < count; ++j) {
    const ComplexMatrix evolved = u * pauli_matrix(labels[j]) * ud;
    for (std::uint64_t i = 0; i < count; ++i) {
      out.r(i, j) = detail::pauli_trace_product(labels[i], evolved).real() / d;
    }
  }
  return out;
}

inline double agf_from_ptms(const PauliTransferMatrix& target, const PauliTransferMatrix& channel) {
  if (target.qubits != channel.qubits || target.r.rows() != channel.r.rows()) {
    throw ModelError("agf_from_ptms: PTM size mismatch");
  }
  const double d = std::ldexp(1.0, target.qubits);
  const double overlap = target.r.cwiseProduct(channel.r).sum();
  return (overlap / d + 1.0) / (d + 1.0);
}

/// Row-major CSV, one row per line, 17 significant digits.
inline void write_ptm_csv(std::ostream& os, const PauliTransferMatrix& m) {
  const auto old_precision = os.precision(17);
  for (Eigen::Index i = 0; i < m.r.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.r.cols(); ++j) {
      if (j) os << ',';
      os << m.r(i, j);
    }
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace vqgo
