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

// Optimizers and the gate-synthesis drivers: limited-memory quasi-Newton for
// the rotation angles, bounded Nelder-Mead for drive amplitudes, multistart
// angle optimization and the concatenated amplitude/angle loop.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "vqgo/ansatz.hpp"
#include "vqgo/parallel.hpp"

namespace vqgo {

struct OptimizerConfig {
  int max_iterations = 5000;
  double gradient_tolerance = 1e-9;
  double cost_tolerance = 1e-12;
  int restarts = 8;
  int memory_depth = 10;
  std::uint64_t seed = 0;

  // Derivative-free search: initial simplex edge as a fraction of each box
  // width, and the simplex diameter below which the search stops.
  double simplex_step = 0.05;
  double x_tolerance = 1e-8;

  // Multistart: restarts run on this many threads; once a restart reaches
  // stop_below (if set) later restarts are skipped.
  int workers = 1;
  std::optional<double> stop_below;

  void validate() const {
    if (max_iterations < 1 || !(gradient_tolerance > 0) || !(cost_tolerance > 0) || restarts < 1 ||
        memory_depth < 1 || !(simplex_step > 0) || !(x_tolerance > 0) || workers < 1) {
      throw ModelError("OptimizerConfig: all settings must be positive and restarts >= 1");
    }
  }
};

struct MinimizeResult {
  RealVector x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string reason;
  std::vector<double> history;  // cost at each accepted iterate
};

/// Value-and-gradient callback: returns f(x) and writes grad f(x) into g.
using CostGradientFn = std::function<double(const RealVector& x, RealVector& g)>;
using CostFn = std::function<double(const RealVector& x)>;
using GradientFn = std::function<RealVector(const RealVector& x)>;

namespace detail {

inline void require_finite(double f, const RealVector& g, const char* where) {
  if (!std::isfinite(f) || !g.allFinite()) throw OptimizerAbort(std::string(where) + ": non-finite cost or gradient");
}

}  // namespace detail

/// L-BFGS with a backtracking (Armijo) line search. `cost` evaluates f alone
/// for line-search trials; `cost_gradient` evaluates f and grad f together at
/// accepted points.
inline MinimizeResult minimize_quasi_newton(const CostFn& cost, const CostGradientFn& cost_gradient,
                                            RealVector x0, const OptimizerConfig& cfg) {
  cfg.validate();
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 60;

  MinimizeResult res;
  res.x = std::move(x0);
  RealVector g(res.x.size());
  res.f = cost_gradient(res.x, g);
  ++res.evaluations;
  detail::require_finite(res.f, g, "minimize_quasi_newton");
  res.history.push_back(res.f);

  if (g.norm() < cfg.gradient_tolerance) {
    res.converged = true;
    res.reason = "gradient tolerance";
    return res;
  }

  std::deque<RealVector> s_hist, y_hist;
  std::deque<double> rho_hist;
  RealVector g_new(res.x.size());

  while (res.iterations < cfg.max_iterations) {
    // Two-loop recursion for d = -H g.
    RealVector d = -g;
    std::vector<double> alpha(s_hist.size());
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(d);
      d -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(d);
      d += (alpha[k] - beta) * s_hist[k];
    }

    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -g;
      slope = -g.squaredNorm();
    }

    double step = s_hist.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    RealVector x_new;
    double f_new = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      x_new = res.x + step * d;
      f_new = cost(x_new);
      ++res.evaluations;
      if (!std::isfinite(f_new)) throw OptimizerAbort("minimize_quasi_newton: non-finite cost");
      if (f_new <= res.f + kArmijo * step * slope) {
        accepted = true;
        // Refine with the minimizer of the interpolating parabola; exact on quadratics.
        const double curvature = 2.0 * (f_new - res.f - step * slope);
        if (curvature > 0.0) {
          const double refined = -slope * step * step / curvature;
          if (refined > 0.0 && refined <= 4.0 * step && std::abs(refined - step) > 1e-3 * step) {
            const RealVector x_try = res.x + refined * d;
            const double f_try = cost(x_try);
            ++res.evaluations;
            if (std::isfinite(f_try) && f_try < f_new) {
              x_new = x_try;
              f_new = f_try;
            }
          }
        }
        break;
      }
      // Quadratic interpolation of the step, kept within [0.1, 0.5] of the last one.
      const double denom = 2.0 * (f_new - res.f - step * slope);
      double next = denom > 0.0 ? -slope * step * step / denom : 0.5 * step;
      step = std::clamp(next, 0.1 * step, 0.5 * step);
    }
    ++res.iterations;

    if (!accepted) {
      if (!s_hist.empty()) {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      // No decrease even along steepest descent: numerically stationary.
      res.converged = true;
      res.reason = "no further decrease";
      return res;
    }

    f_new = cost_gradient(x_new, g_new);
    ++res.evaluations;
    detail::require_finite(f_new, g_new, "minimize_quasi_newton");

    const RealVector s = x_new - res.x;
    const RealVector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm() && sy > 0.0) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > cfg.memory_depth) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double decrease = res.f - f_new;
    res.x = x_new;
    res.f = f_new;
    g = g_new;
    res.history.push_back(res.f);

    if (g.norm() < cfg.gradient_tolerance) {
      res.converged = true;
      res.reason = "gradient tolerance";
      return res;
    }
    if (decrease < cfg.cost_tolerance) {
      res.converged = true;
      res.reason = "cost tolerance";
      return res;
    }
  }
  res.reason = "iteration limit";
  return res;
}

inline MinimizeResult minimize_quasi_newton(const CostFn& cost, const GradientFn& grad, RealVector x0,
                                            const OptimizerConfig& cfg) {
  return minimize_quasi_newton(
      cost,
      [&](const RealVector& x, RealVector& g) {
        g = grad(x);
        return cost(x);
      },
      std::move(x0), cfg);
}

struct BoxBounds {
  RealVector lower;
  RealVector upper;

  static BoxBounds uniform(Eigen::Index n, double lo, double hi) {
    return {RealVector::Constant(n, lo), RealVector::Constant(n, hi)};
  }

  void validate(Eigen::Index n) const {
    if (lower.size() != n || upper.size() != n) throw ModelError("BoxBounds: dimension mismatch");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(lower(i)) || !std::isfinite(upper(i)) || !(lower(i) < upper(i))) {
        throw ModelError("BoxBounds: bounds must be finite with lower < upper");
      }
    }
  }

  RealVector project(const RealVector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

/// Nelder-Mead simplex search with candidates projected onto the box. The
/// evaluation budget is cfg.max_iterations; the search stops when the simplex
/// cost spread falls below cfg.cost_tolerance or its diameter below
/// cfg.x_tolerance.
inline MinimizeResult minimize_derivative_free(const CostFn& f, const RealVector& x0, const BoxBounds& bounds,
                                               const OptimizerConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = x0.size();
  if (n < 1) throw ModelError("minimize_derivative_free: empty parameter vector");
  bounds.validate(n);

  MinimizeResult res;
  auto eval = [&](const RealVector& x) {
    const double v = f(x);
    ++res.evaluations;
    if (!std::isfinite(v)) throw OptimizerAbort("minimize_derivative_free: non-finite cost");
    return v;
  };

  std::vector<RealVector> pts;
  std::vector<double> vals;
  pts.push_back(bounds.project(x0));
  vals.push_back(eval(pts[0]));
  for (Eigen::Index i = 0; i < n; ++i) {
    RealVector p = pts[0];
    const double step = cfg.simplex_step * (bounds.upper(i) - bounds.lower(i));
    p(i) = p(i) + step <= bounds.upper(i) ? p(i) + step : p(i) - step;
    p = bounds.project(p);
    pts.push_back(p);
    vals.push_back(eval(p));
  }
  res.history.push_back(*std::min_element(vals.begin(), vals.end()));

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&]() {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<RealVector> p2;
    std::vector<double> v2;
    for (auto k : order) {
      p2.push_back(pts[k]);
      v2.push_back(vals[k]);
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };

  for (;;) {
    sort_simplex();
    double diameter = 0.0;
    for (Eigen::Index k = 1; k <= n; ++k) diameter = std::max(diameter, (pts[k] - pts[0]).cwiseAbs().maxCoeff());
    if (vals[n] - vals[0] <= cfg.cost_tolerance) {
      res.converged = true;
      res.reason = "cost tolerance";
      break;
    }
    if (diameter <= cfg.x_tolerance) {
      res.converged = true;
      res.reason = "simplex diameter";
      break;
    }
    if (res.evaluations >= cfg.max_iterations) {
      res.reason = "evaluation limit";
      break;
    }
    ++res.iterations;

    RealVector centroid = RealVector::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) centroid += pts[k];
    centroid /= static_cast<double>(n);

    const RealVector xr = bounds.project(centroid + (centroid - pts[n]));
    const double fr = eval(xr);
    if (fr < vals[0]) {
      const RealVector xe = bounds.project(centroid + 2.0 * (centroid - pts[n]));
      const double fe = eval(xe);
      if (fe < fr) {
        pts[n] = xe;
        vals[n] = fe;
      } else {
        pts[n] = xr;
        vals[n] = fr;
      }
    } else if (fr < vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
    } else {
      const bool outside = fr < vals[n];
      const RealVector xc = outside ? bounds.project(centroid + 0.5 * (xr - centroid))
                                    : bounds.project(centroid + 0.5 * (pts[n] - centroid));
      const double fc = eval(xc);
      if (fc < (outside ? fr : vals[n])) {
        pts[n] = xc;
        vals[n] = fc;
      } else {
        for (Eigen::Index k = 1; k <= n; ++k) {
          pts[k] = bounds.project(pts[0] + 0.5 * (pts[k] - pts[0]));
          vals[k] = eval(pts[k]);
        }
      }
    }
    res.history.push_back(std::min(res.history.back(), *std::min_element(vals.begin(), vals.end())));
  }
  res.x = pts[0];
  res.f = vals[0];
  return res;
}

enum class CostBackend { exact, emulated };

struct OptimizationResult {
  CircuitParams best_params{CircuitShape{}};
  double best_cost = 1.0;
  int iterations_used = 0;
  bool converged = false;
  int restart_index = -1;
  int restarts_run = 0;
  std::uint64_t seed = 0;
  std::vector<double> cost_history;   // accepted iterates of the best restart
  std::vector<double> restart_costs;  // final cost of every restart that ran
  std::string stop_reason;
};

/// Multistart angle optimization. Restart r starts from angles drawn uniformly
/// in [0, 2pi) with the stream RandomSource(cfg.seed).split(2r); results are
/// independent of thread scheduling.
inline OptimizationResult vqgo(const ComplexMatrix& target, const SourceGateSet& sources, const CircuitShape& shape,
                               const OptimizerConfig& cfg, CostBackend backend = CostBackend::exact,
                               Shots shots = std::nullopt) {
  cfg.validate();
  shape.validate();
  const AgiObjective exact(target, sources, shape);
  const RandomSource base(cfg.seed);

  struct RestartOutcome {
    std::optional<MinimizeResult> min;
    std::optional<OptimizerAbort> abort;
  };
  std::vector<RestartOutcome> outcomes(cfg.restarts);
  std::mutex mutex;
  int first_hit = std::numeric_limits<int>::max();

  auto run_restart = [&](std::size_t r) {
    RandomSource init_rng = base.split(2 * r);
    const CircuitParams start = CircuitParams::random(shape, init_rng);
    const RealVector x0 = Eigen::Map<const RealVector>(start.values().data(), static_cast<Eigen::Index>(start.values().size()));

    auto to_params = [&](const RealVector& x) {
      return CircuitParams(shape, std::vector<double>(x.data(), x.data() + x.size()));
    };

    MinimizeResult m;
    try {
      if (backend == CostBackend::exact) {
        m = minimize_quasi_newton(
            [&](const RealVector& x) { return exact.cost(to_params(x)); },
            [&](const RealVector& x, RealVector& g) {
              g.resize(x.size());
              return exact.cost_and_gradient(to_params(x), std::span<double>(g.data(), static_cast<std::size_t>(g.size())));
            },
            x0, cfg);
      } else {
        EmulatedObjective emulated(target, sources, shape, shots, base.split(2 * r + 1).seed());
        m = minimize_quasi_newton(
            [&](const RealVector& x) { return emulated.cost(to_params(x)); },
            [&](const RealVector& x, RealVector& g) {
              g.resize(x.size());
              return emulated.cost_and_gradient(to_params(x), std::span<double>(g.data(), static_cast<std::size_t>(g.size())));
            },
            x0, cfg);
      }
    } catch (const OptimizerAbort& e) {
      std::lock_guard<std::mutex> lock(mutex);
      outcomes[r].abort = OptimizerAbort(std::string(e.what()) + " (restart " + std::to_string(r) + ")", static_cast<int>(r));
      return;
    }
    std::lock_guard<std::mutex> lock(mutex);
    if (cfg.stop_below && m.f <= *cfg.stop_below) first_hit = std::min(first_hit, static_cast<int>(r));
    outcomes[r].min = std::move(m);
  };

  parallel_for(static_cast<std::size_t>(cfg.restarts), cfg.workers, run_restart, [&](std::size_t r) {
    std::lock_guard<std::mutex> lock(mutex);
    return static_cast<int>(r) > first_hit;
  });

  const int last = std::min(cfg.restarts - 1, first_hit);
  OptimizationResult out;
  out.seed = cfg.seed;
  int best = -1;
  for (int r = 0; r <= last; ++r) {
    if (outcomes[r].abort) throw *outcomes[r].abort;
    const auto& m = *outcomes[r].min;
    out.restart_costs.push_back(m.f);
    if (best < 0 || m.f < outcomes[best].min->f) best = r;
  }
  const auto& m = *outcomes[best].min;
  out.best_params = CircuitParams(shape, std::vector<double>(m.x.data(), m.x.data() + m.x.size())).wrapped();
  out.best_cost = exact.cost(out.best_params);
  out.iterations_used = m.iterations;
  out.converged = m.converged;
  out.restart_index = best;
  out.restarts_run = last + 1;
  out.cost_history = m.history;
  out.stop_reason = m.reason;
  return out;
}

struct AmplitudeBounds {
  double lower_mhz = 0.0;
  double upper_mhz = 200.0;

  void validate() const {
    if (!(lower_mhz >= 0.0) || !(lower_mhz < upper_mhz) || !std::isfinite(upper_mhz)) {
      throw ModelError("AmplitudeBounds: need 0 <= lower < upper < inf");
    }
  }
};

/// Builds the source gates for drive amplitudes omega (MHz) and gate time t (ns).
using SourceFactory = std::function<SourceGateSet(const RealVector& omega_mhz, double t_ns)>;

struct ConcatenatedResult {
  RealVector omega_mhz;
  OptimizationResult inner;
  int outer_evaluations = 0;
  int outer_iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::vector<double> outer_history;
};

/// Defaults for the outer amplitude search: at most 80 inner optimizations,
/// 10 MHz initial simplex on a 200 MHz box, stop below 1e-3 MHz or 1e-10 spread.
inline OptimizerConfig default_outer_config() {
  OptimizerConfig c;
  c.max_iterations = 80;
  c.cost_tolerance = 1e-10;
  c.simplex_step = 0.05;
  c.x_tolerance = 1e-3;
  return c;
}

/// Outer derivative-free search over drive amplitudes whose cost is the best
/// inner angle-optimized infidelity at those amplitudes. Every inner run uses
/// the same seed, so the outer landscape is deterministic.
inline ConcatenatedResult concatenated_optimize(const ComplexMatrix& target, const SourceFactory& factory,
                                                const RealVector& omega0, const AmplitudeBounds& bounds, double t_ns,
                                                const OptimizerConfig& cfg,
                                                const OptimizerConfig& outer = default_outer_config()) {
  bounds.validate();
  cfg.validate();
  const int n = qubit_count(target.rows());
  std::optional<OptimizationResult> best_inner;
  RealVector best_omega;

  auto outer_cost = [&](const RealVector& omega) {
    const SourceGateSet sources = factory(omega, t_ns);
    const CircuitShape shape{n, static_cast<int>(sources.size())};
    OptimizationResult r = vqgo(target, sources, shape, cfg);
    if (!best_inner || r.best_cost < best_inner->best_cost) {
      best_inner = r;
      best_omega = omega;
    }
    return r.best_cost;
  };

  const auto box = BoxBounds::uniform(omega0.size(), bounds.lower_mhz, bounds.upper_mhz);
  const MinimizeResult m = minimize_derivative_free(outer_cost, omega0, box, outer);
  ConcatenatedResult out;
  out.omega_mhz = best_omega;
  out.inner = *best_inner;
  out.outer_evaluations = m.evaluations;
  out.outer_iterations = m.iterations;
  out.converged = m.converged;
  out.stop_reason = m.reason;
  out.outer_history = m.history;
  return out;
}

}  // namespace vqgo
