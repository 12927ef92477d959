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

// Direct fidelity estimation: measurement planning from the target PTM,
// simulated Pauli expectation values with optional shot noise, and the
// full-support and sampled fidelity estimators.
//
// The estimator's accuracy/failure parameters are named delta_acc/eps_fail to
// keep them apart from the crosstalk amplitude and detuning of the device
// models.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqgo/channels.hpp"

namespace vqgo {

/// Number of shots per expectation value; nullopt means the exact (infinite-shot) value.
using Shots = std::optional<std::int64_t>;

inline constexpr double kPtmSupportThreshold = 1e-12;

struct PauliEigenstate {
  ComplexVector state;
  int eigenvalue = 1;
};

/// Product eigenbasis of a Pauli string. Entry k uses bit (n-1-q) of k to pick
/// the +1 (bit 0) or -1 (bit 1) eigenvector of qubit q. Identity letters use
/// |0>,|1> and contribute +1 to the eigenvalue.
inline std::vector<PauliEigenstate> pauli_eigenbasis(const PauliLabel& label) {
  const int n = label.qubits();
  const double r = 1.0 / std::sqrt(2.0);
  auto single = [&](std::uint8_t letter, bool minus) {
    Eigen::Vector2cd v;
    switch (letter) {
      case 1: v << r, minus ? -r : r; break;
      case 2: v << r, minus ? Complex(0, -r) : Complex(0, r); break;
      default: v << (minus ? 0.0 : 1.0), (minus ? 1.0 : 0.0); break;
    }
    return v;
  };
  const std::uint64_t count = std::uint64_t{1} << n;
  std::vector<PauliEigenstate> basis;
  basis.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    ComplexVector state = ComplexVector::Ones(1);
    int eigenvalue = 1;
    for (int q = 0; q < n; ++q) {
      const bool minus = (k >> (n - 1 - q)) & 1u;
      const auto letter = label.letter(q);
      if (letter != 0 && minus) eigenvalue = -eigenvalue;
      const Eigen::Vector2cd s = single(letter, minus);
      ComplexVector next(state.size() * 2);
      for (Eigen::Index a = 0; a < state.size(); ++a) {
        next(2 * a) = state(a) * s(0);
        next(2 * a + 1) = state(a) * s(1);
      }
      state = std::move(next);
    }
    basis.push_back({std::move(state), eigenvalue});
  }
  return basis;
}

namespace detail {

inline bool is_pauli_like(const ComplexMatrix& obs) {
  return is_hermitian(obs, 1e-10) && max_abs(obs * obs - identity(obs.rows())) < 1e-10;
}

inline double sample_pauli_mean(double exact, std::int64_t shots, RandomSource& rng) {
  const double p_plus = std::clamp(0.5 * (1.0 + exact), 0.0, 1.0);
  const auto plus = std::binomial_distribution<std::int64_t>(shots, p_plus)(rng.engine());
  return static_cast<double>(2 * plus - shots) / static_cast<double>(shots);
}

}  // namespace detail

/// Tr[obs u rho u^dag], exact.
inline double simulate_expectation(const ComplexMatrix& u, const ComplexMatrix& rho,
                                   const ComplexMatrix& obs) {
  require_square(u, "simulate_expectation");
  if (rho.rows() != u.rows() || obs.rows() != u.rows() || !is_square(rho) || !is_square(obs)) {
    throw ModelError("simulate_expectation: dimension mismatch");
  }
  return (obs * u * rho * u.adjoint()).trace().real();
}

/// Exact when shots is nullopt; otherwise the mean of `shots` simulated +/-1
/// outcomes drawn with Born probabilities. Finite shots need a Pauli observable.
inline double simulate_expectation(const ComplexMatrix& u, const ComplexMatrix& rho,
                                   const ComplexMatrix& obs, Shots shots, RandomSource& rng) {
  const double exact = simulate_expectation(u, rho, obs);
  if (!shots) return exact;
  if (*shots < 1) throw ModelError("simulate_expectation: shots must be >= 1");
  if (!detail::is_pauli_like(obs)) {
    throw UnsupportedError("simulate_expectation: finite-shot sampling needs a +/-1 valued observable");
  }
  return detail::sample_pauli_mean(exact, *shots, rng);
}

namespace detail {

// Exact <psi_jk| u^dag sigma_i u |psi_jk> for every eigenstate k of sigma_j.
inline std::vector<double> eigenstate_expectations(const ComplexMatrix& u, const PauliLabel& i,
                                                   const PauliLabel& j) {
  const auto basis = pauli_eigenbasis(j);
  const ComplexMatrix sigma_i = pauli_matrix(i);
  std::vector<double> out;
  out.reserve(basis.size());
  for (const auto& e : basis) {
    const ComplexVector evolved = u * e.state;
    out.push_back(evolved.dot(sigma_i * evolved).real());
  }
  return out;
}

inline double combine_eigenstates(const std::vector<double>& expectations, const PauliLabel& j,
                                  Shots shots, RandomSource* rng) {
  const auto basis = pauli_eigenbasis(j);
  double acc = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double value = shots ? sample_pauli_mean(expectations[k], *shots, *rng) : expectations[k];
    acc += basis[k].eigenvalue * value;
  }
  return acc / static_cast<double>(basis.size());
}

}  // namespace detail

/// R(u)_ij reconstructed from eigenstate preparations of sigma_j and
/// measurements of sigma_i.
inline double ptm_entry_measured(const ComplexMatrix& u, const PauliLabel& i, const PauliLabel& j) {
  require_square(u, "ptm_entry_measured");
  if (i.qubits() != j.qubits() || (Eigen::Index{1} << i.qubits()) != u.rows()) {
    throw ModelError("ptm_entry_measured: label/qubit mismatch");
  }
  return detail::combine_eigenstates(detail::eigenstate_expectations(u, i, j), j, std::nullopt, nullptr);
}

inline double ptm_entry_measured(const ComplexMatrix& u, const PauliLabel& i, const PauliLabel& j,
                                 Shots shots, RandomSource& rng) {
  if (!shots) return ptm_entry_measured(u, i, j);
  if (*shots < 1) throw ModelError("ptm_entry_measured: shots must be >= 1");
  require_square(u, "ptm_entry_measured");
  if (i.qubits() != j.qubits() || (Eigen::Index{1} << i.qubits()) != u.rows()) {
    throw ModelError("ptm_entry_measured: label/qubit mismatch");
  }
  return detail::combine_eigenstates(detail::eigenstate_expectations(u, i, j), j, shots, &rng);
}

enum class DfeMode { full_support, sampled };

struct DfeEntry {
  PauliLabel i;
  PauliLabel j;
  double target_value = 0.0;  // R(U)_ij
  double weight = 0.0;        // P_ij = R(U)_ij^2 / D^2
};

struct DfePlan {
  int qubits = 0;
  DfeMode mode = DfeMode::full_support;
  std::vector<DfeEntry> entries;

  double total_weight() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.weight;
    return s;
  }
};

inline DfePlan dfe_plan(const PauliTransferMatrix& r_target, DfeMode mode = DfeMode::full_support) {
  const double d = std::ldexp(1.0, r_target.qubits);
  DfePlan plan{r_target.qubits, mode, {}};
  for (Eigen::Index i = 0; i < r_target.r.rows(); ++i) {
    for (Eigen::Index j = 0; j < r_target.r.cols(); ++j) {
      const double value = r_target.r(i, j);
      if (std::abs(value) <= kPtmSupportThreshold) continue;
      plan.entries.push_back({PauliLabel::from_index(static_cast<std::uint64_t>(i), r_target.qubits),
                              PauliLabel::from_index(static_cast<std::uint64_t>(j), r_target.qubits),
                              value, value * value / (d * d)});
    }
  }
  if (plan.entries.empty()) throw ModelError("dfe_plan: target PTM has no nonzero entries");
  return plan;
}

struct DfeSamplingConfig {
  double eps_fail = 0.05;
  double delta_acc = 0.05;
  std::int64_t shots_per_setting = 1;

  /// Number of sampled settings, ceil(1 / (eps_fail^2 * delta_acc)).
  std::size_t settings() const {
    if (!(eps_fail > 0.0 && eps_fail < 1.0) || !(delta_acc > 0.0)) {
      throw ModelError("DfeSamplingConfig: need 0 < eps_fail < 1 and delta_acc > 0");
    }
    return static_cast<std::size_t>(std::ceil(1.0 / (eps_fail * eps_fail * delta_acc) - 1e-9));
  }
};

namespace detail {

inline void check_plan(const ComplexMatrix& u, const PauliTransferMatrix& r_target, const DfePlan& plan) {
  require_square(u, "dfe_estimate");
  if (plan.qubits != r_target.qubits || (Eigen::Index{1} << plan.qubits) != u.rows()) {
    throw ModelError("dfe_estimate: plan, target and channel dimensions disagree");
  }
  for (const auto& e : plan.entries) {
    if (std::abs(e.target_value) <= kPtmSupportThreshold) {
      throw std::logic_error("dfe_estimate: plan contains a vanishing target entry");
    }
  }
}

inline double fidelity_from_ratio_sum(double weighted_ratio_sum, int qubits) {
  const double d = std::ldexp(1.0, qubits);
  return (d * weighted_ratio_sum + 1.0) / (d + 1.0);
}

}  // namespace detail

/// Exact estimator over every plan entry (noiseless expectation values).
inline double dfe_estimate(const ComplexMatrix& u_actual, const PauliTransferMatrix& r_target,
                           const DfePlan& plan) {
  detail::check_plan(u_actual, r_target, plan);
  double acc = 0.0;
  for (const auto& e : plan.entries) {
    acc += e.weight * ptm_entry_measured(u_actual, e.i, e.j) / e.target_value;
  }
  return detail::fidelity_from_ratio_sum(acc, plan.qubits);
}

/// Measured estimator. Full-support plans measure every entry with
/// cfg.shots_per_setting shots per eigenstate preparation; sampled plans draw
/// cfg.settings() entries with probability P_ij and average R_hat/R.
inline double dfe_estimate(const ComplexMatrix& u_actual, const PauliTransferMatrix& r_target,
                           const DfePlan& plan, const DfeSamplingConfig& cfg, RandomSource& rng) {
  detail::check_plan(u_actual, r_target, plan);
  if (cfg.shots_per_setting < 1) throw ModelError("dfe_estimate: shots_per_setting must be >= 1");
  const Shots shots = cfg.shots_per_setting;

  std::vector<std::vector<double>> exact(plan.entries.size());
  auto expectations = [&](std::size_t k) -> const std::vector<double>& {
    if (exact[k].empty()) exact[k] = detail::eigenstate_expectations(u_actual, plan.entries[k].i, plan.entries[k].j);
    return exact[k];
  };

  if (plan.mode == DfeMode::full_support) {
    double acc = 0.0;
    for (std::size_t k = 0; k < plan.entries.size(); ++k) {
      const auto& e = plan.entries[k];
      const double measured = detail::combine_eigenstates(expectations(k), e.j, shots, &rng);
      acc += e.weight * measured / e.target_value;
    }
    return detail::fidelity_from_ratio_sum(acc, plan.qubits);
  }

  std::vector<double> weights;
  weights.reserve(plan.entries.size());
  for (const auto& e : plan.entries) weights.push_back(e.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  const std::size_t draws = cfg.settings();
  double acc = 0.0;
  for (std::size_t s = 0; s < draws; ++s) {
    const std::size_t k = pick(rng.engine());
    const auto& e = plan.entries[k];
    acc += detail::combine_eigenstates(expectations(k), e.j, shots, &rng) / e.target_value;
  }
  return detail::fidelity_from_ratio_sum(acc / static_cast<double>(draws), plan.qubits);
}

inline nlohmann::json to_json(const DfePlan& plan) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : plan.entries) {
    entries.push_back({{"observable", e.i.str()},
                       {"preparation", e.j.str()},
                       {"target_value", e.target_value},
                       {"weight", e.weight}});
  }
  return {{"qubits", plan.qubits},
          {"mode", plan.mode == DfeMode::full_support ? "full_support" : "sampled"},
          {"entries", std::move(entries)}};
}

inline nlohmann::json estimate_report(double estimate, const DfePlan& plan,
                                      const std::optional<DfeSamplingConfig>& cfg, std::uint64_t seed) {
  nlohmann::json report{{"estimate", estimate}, {"plan", to_json(plan)}, {"seed", seed}};
  if (cfg) {
    report["eps_fail"] = cfg->eps_fail;
    report["delta_acc"] = cfg->delta_acc;
    report["shots_per_setting"] = cfg->shots_per_setting;
    if (plan.mode == DfeMode::sampled) report["settings"] = cfg->settings();
  } else {
    report["shots_per_setting"] = "exact";
  }
  return report;
}

}  // namespace vqgo
