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

// Experiment runner behind the vqgo command-line tool: JSON configuration,
// CNOT and syndrome-extraction gate-time sweeps, the Cartan-space map, single
// optimizations, CSV output with '#' metadata lines, and CSV re-verification.
#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vqgo/analysis.hpp"
#include "vqgo/devices.hpp"
#include "vqgo/optimkit.hpp"
#include "vqgo/parallel.hpp"

namespace vqgo {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Configuration problem; line() is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0) : std::runtime_error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { cnot_sweep, syndrome_sweep, cartan_map, single_optimize };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::cnot_sweep: return "cnot_sweep";
    case ExperimentKind::syndrome_sweep: return "syndrome_sweep";
    case ExperimentKind::cartan_map: return "cartan_map";
    case ExperimentKind::single_optimize: return "single_optimize";
  }
  return "unknown";
}

struct SweepGrid {
  double start_ns = 0.0;
  double stop_ns = 750.0;
  double step_ns = 7.5;

  std::vector<double> points() const {
    const auto count = static_cast<std::size_t>(std::floor((stop_ns - start_ns) / step_ns + 1e-9)) + 1;
    std::vector<double> t(count);
    for (std::size_t k = 0; k < count; ++k) t[k] = start_ns + static_cast<double>(k) * step_ns;
    return t;
  }
};

struct CrosstalkCase {
  double eps = 0.0;
  double phi_rad = 0.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::single_optimize;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output;
  nlohmann::json effective;  // resolved configuration, embedded in outputs

  OptimizerConfig optimizer;
  OptimizerConfig outer = default_outer_config();
  AmplitudeBounds bounds;
  double calibration_t_ns = 75.0;
  SweepGrid sweep;

  // cnot_sweep
  CrossResonancePair pair{200.0, 5.0, 0.0, 0.0};
  std::vector<CrosstalkCase> crosstalk_cases;
  double omega0_mhz = 50.0;
  double tpcx_scan_step_mhz = 1.0;
  std::vector<double> reference_tpcx_omega_mhz;
  std::vector<double> reference_vqgo_omega_mhz;

  // syndrome_sweep
  FourQubitDevice device;
  std::vector<bool> syndrome_crosstalk;  // false = crosstalk off
  std::array<double, 4> omega0_4_mhz{100.0, 100.0, 100.0, 100.0};
  std::array<int, 2> layer_signs{1, 1};
  std::vector<double> reference_omega_off_mhz;
  std::vector<double> reference_omega_on_mhz;

  // cartan_map
  int grid_points = 9;
  int depth = 2;

  // single_optimize
  nlohmann::json target_spec;
  nlohmann::json sources_spec;
  CostBackend backend = CostBackend::exact;
  Shots shots;
};

namespace detail {

inline int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Reads typed fields from a parsed config and reports failures against the
/// line where the offending key first appears in the source text.
class ConfigReader {
 public:
  explicit ConfigReader(std::string text) : text_(std::move(text)) {}

  const std::string& text() const { return text_; }

  int line_of(std::string_view key) const {
    const std::string quoted = "\"" + std::string(key) + "\"";
    const auto pos = text_.find(quoted);
    return pos == std::string::npos ? 0 : line_of_offset(text_, pos);
  }

  [[noreturn]] void fail(std::string_view key, const std::string& msg) const {
    throw ConfigError("key '" + std::string(key) + "': " + msg, line_of(key));
  }

  template <class T>
  T get(const nlohmann::json& obj, std::string_view key) const {
    if (!obj.contains(key)) fail(key, "missing required key");
    return convert<T>(obj.at(key), key);
  }

  template <class T>
  T get_or(const nlohmann::json& obj, std::string_view key, T fallback) const {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    return convert<T>(obj.at(key), key);
  }

  double positive(const nlohmann::json& obj, std::string_view key, double fallback) const {
    const double v = get_or<double>(obj, key, fallback);
    if (!(v > 0.0) || !std::isfinite(v)) fail(key, "must be a positive finite number");
    return v;
  }

  double finite(const nlohmann::json& obj, std::string_view key, double fallback) const {
    const double v = get_or<double>(obj, key, fallback);
    if (!std::isfinite(v)) fail(key, "must be finite");
    return v;
  }

 private:
  template <class T>
  T convert(const nlohmann::json& v, std::string_view key) const {
    try {
      if constexpr (std::is_arithmetic_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number()) fail(key, "expected a number");
        if constexpr (std::is_integral_v<T>) {
          if (!v.is_number_integer() && !v.is_number_unsigned()) fail(key, "expected an integer");
        }
      }
      return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail(key, e.what());
    }
  }

  std::string text_;
};

inline OptimizerConfig parse_optimizer(const ConfigReader& r, const nlohmann::json& j, OptimizerConfig base) {
  if (j.is_null()) return base;
  if (!j.is_object()) r.fail("optimizer", "expected an object");
  base.max_iterations = r.get_or<int>(j, "max_iterations", base.max_iterations);
  base.gradient_tolerance = r.positive(j, "gradient_tolerance", base.gradient_tolerance);
  base.cost_tolerance = r.positive(j, "cost_tolerance", base.cost_tolerance);
  base.restarts = r.get_or<int>(j, "restarts", base.restarts);
  base.memory_depth = r.get_or<int>(j, "memory_depth", base.memory_depth);
  if (j.contains("stop_below")) base.stop_below = r.get<double>(j, "stop_below");
  if (base.max_iterations < 1) r.fail("max_iterations", "must be >= 1");
  if (base.restarts < 1) r.fail("restarts", "must be >= 1");
  if (base.memory_depth < 1) r.fail("memory_depth", "must be >= 1");
  return base;
}

inline OptimizerConfig parse_outer(const ConfigReader& r, const nlohmann::json& j, OptimizerConfig base) {
  if (j.is_null()) return base;
  if (!j.is_object()) r.fail("outer", "expected an object");
  base.max_iterations = r.get_or<int>(j, "max_evaluations", base.max_iterations);
  base.simplex_step = r.positive(j, "initial_step_fraction", base.simplex_step);
  base.x_tolerance = r.positive(j, "x_tolerance_mhz", base.x_tolerance);
  base.cost_tolerance = r.positive(j, "cost_tolerance", base.cost_tolerance);
  if (base.max_iterations < 1) r.fail("max_evaluations", "must be >= 1");
  return base;
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": line " + std::to_string(line_of_offset(ss.str(), e.byte)) + ": " + e.what(),
                      0);
  }
}

}  // namespace detail

/// Parses a configuration document. Relative device_file paths resolve against
/// base_dir and are inlined into `effective`.
inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  detail::ConfigReader r(text);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const int line = detail::line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("malformed JSON: " + std::string(e.what()), line);
  }
  if (!j.is_object()) throw ConfigError("top level must be a JSON object", 1);

  ExperimentConfig cfg;
  const auto kind = r.get<std::string>(j, "experiment");
  if (kind == "cnot_sweep") cfg.kind = ExperimentKind::cnot_sweep;
  else if (kind == "syndrome_sweep") cfg.kind = ExperimentKind::syndrome_sweep;
  else if (kind == "cartan_map") cfg.kind = ExperimentKind::cartan_map;
  else if (kind == "single_optimize") cfg.kind = ExperimentKind::single_optimize;
  else r.fail("experiment", "unknown experiment '" + kind + "'");

  cfg.seed = r.get_or<std::uint64_t>(j, "seed", 0);
  cfg.workers = r.get_or<int>(j, "workers", 1);
  if (cfg.workers < 1) r.fail("workers", "must be >= 1");
  cfg.output = r.get_or<std::string>(j, "output", "");
  cfg.optimizer = detail::parse_optimizer(r, j.value("optimizer", nlohmann::json()), OptimizerConfig{});
  cfg.outer = detail::parse_outer(r, j.value("outer", nlohmann::json()), default_outer_config());
  cfg.calibration_t_ns = r.positive(j, "calibration_t_ns", 75.0);

  if (j.contains("omega_bounds_mhz")) {
    const auto b = r.get<std::vector<double>>(j, "omega_bounds_mhz");
    if (b.size() != 2 || !(b[0] >= 0.0) || !(b[0] < b[1])) r.fail("omega_bounds_mhz", "expected [lower, upper] with 0 <= lower < upper");
    cfg.bounds = {b[0], b[1]};
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    cfg.sweep.start_ns = r.finite(s, "t_start_ns", 0.0);
    cfg.sweep.stop_ns = r.finite(s, "t_stop_ns", 750.0);
    cfg.sweep.step_ns = r.positive(s, "t_step_ns", 7.5);
    if (cfg.sweep.start_ns < 0.0 || cfg.sweep.stop_ns < cfg.sweep.start_ns) {
      r.fail("sweep", "need 0 <= t_start_ns <= t_stop_ns");
    }
  }

  // Device files are inlined so outputs are self-describing.
  if (j.contains("device_file")) {
    const auto rel = r.get<std::string>(j, "device_file");
    const auto path = std::filesystem::path(rel).is_absolute() ? std::filesystem::path(rel) : base_dir / rel;
    nlohmann::json dev;
    try {
      dev = detail::load_json_file(path);
    } catch (const IoError& e) {
      r.fail("device_file", e.what());
    }
    j["device"] = dev;
    j.erase("device_file");
  }

  try {
    switch (cfg.kind) {
      case ExperimentKind::cnot_sweep: {
        if (j.contains("device")) cfg.pair = j.at("device").get<CrossResonancePair>();
        const auto& dev = j.value("device", nlohmann::json::object());
        cfg.reference_tpcx_omega_mhz = r.get_or<std::vector<double>>(dev, "reference_tpcx_omega_mhz", {});
        cfg.reference_vqgo_omega_mhz = r.get_or<std::vector<double>>(dev, "reference_vqgo_omega_mhz", {});
        if (j.contains("crosstalk_cases")) {
          const auto& cases = j.at("crosstalk_cases");
          if (!cases.is_array() || cases.empty()) r.fail("crosstalk_cases", "expected a non-empty array");
          for (const auto& c : cases) {
            CrosstalkCase cc{r.finite(c, "eps", 0.0), r.finite(c, "phi_rad", 0.0)};
            if (cc.eps < 0.0) r.fail("eps", "must be >= 0");
            cfg.crosstalk_cases.push_back(cc);
          }
        } else {
          cfg.crosstalk_cases = {{0.0, kPi / 4}, {0.1, kPi / 4}, {1.0, kPi / 4}};
        }
        cfg.omega0_mhz = r.finite(j, "omega0_mhz", 50.0);
        cfg.tpcx_scan_step_mhz = r.positive(j, "tpcx_scan_step_mhz", 1.0);
        if (!j.contains("omega_bounds_mhz")) cfg.bounds = {0.0, 200.0};
        break;
      }
      case ExperimentKind::syndrome_sweep: {
        if (!j.contains("device")) r.fail("device", "syndrome_sweep needs a four-qubit device or device_file");
        cfg.device = j.at("device").get<FourQubitDevice>();
        const auto& dev = j.at("device");
        cfg.reference_omega_off_mhz = r.get_or<std::vector<double>>(dev, "reference_omega_off_mhz", {});
        cfg.reference_omega_on_mhz = r.get_or<std::vector<double>>(dev, "reference_omega_on_mhz", {});
        const auto cases = r.get_or<std::vector<std::string>>(j, "crosstalk_cases", {"off", "on"});
        if (cases.empty()) r.fail("crosstalk_cases", "expected a non-empty list");
        for (const auto& c : cases) {
          if (c != "off" && c != "on") r.fail("crosstalk_cases", "entries must be \"off\" or \"on\"");
          cfg.syndrome_crosstalk.push_back(c == "on");
        }
        if (j.contains("omega0_mhz")) {
          const auto o = r.get<std::vector<double>>(j, "omega0_mhz");
          if (o.size() != 4) r.fail("omega0_mhz", "expected 4 amplitudes");
          std::copy(o.begin(), o.end(), cfg.omega0_4_mhz.begin());
        }
        if (j.contains("layer_signs")) {
          const auto s = r.get<std::vector<int>>(j, "layer_signs");
          if (s.size() != 2 || std::abs(s[0]) != 1 || std::abs(s[1]) != 1) r.fail("layer_signs", "expected two entries of +1/-1");
          cfg.layer_signs = {s[0], s[1]};
        }
        break;
      }
      case ExperimentKind::cartan_map: {
        cfg.grid_points = r.get_or<int>(j, "grid_points", 9);
        if (cfg.grid_points < 2) r.fail("grid_points", "must be >= 2");
        cfg.depth = r.get_or<int>(j, "depth", 2);
        if (cfg.depth < 1) r.fail("depth", "must be >= 1");
        if (!j.contains("optimizer") || !j.at("optimizer").contains("restarts")) cfg.optimizer.restarts = 3;
        break;
      }
      case ExperimentKind::single_optimize: {
        if (!j.contains("target")) r.fail("target", "missing required key");
        cfg.target_spec = j.at("target");
        if (j.contains("concatenated")) {
          cfg.sources_spec = j.at("concatenated");
        } else {
          if (!j.contains("sources") || !j.at("sources").is_array() || j.at("sources").empty()) {
            r.fail("sources", "expected a non-empty array of gate specs");
          }
          cfg.sources_spec = j.at("sources");
        }
        const auto backend = r.get_or<std::string>(j, "backend", "exact");
        if (backend == "emulated") cfg.backend = CostBackend::emulated;
        else if (backend != "exact") r.fail("backend", "expected \"exact\" or \"emulated\"");
        if (j.contains("shots") && !j.at("shots").is_null()) {
          const auto s = r.get<std::int64_t>(j, "shots");
          if (s < 1) r.fail("shots", "must be >= 1");
          cfg.shots = s;
        }
        break;
      }
    }
  } catch (const ModelError& e) {
    r.fail("device", e.what());
  } catch (const nlohmann::json::exception& e) {
    r.fail("device", e.what());
  }

  cfg.effective = j;
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

inline void set_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.effective["seed"] = seed;
}

inline void set_workers(ExperimentConfig& cfg, int workers) {
  if (workers < 1) throw ConfigError("--workers must be >= 1");
  cfg.workers = workers;
  cfg.effective["workers"] = workers;
}

/// 64-bit FNV-1a of the compact effective configuration.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : cfg.effective.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Gate specifications used by single_optimize: {"kind": ...}.

inline ComplexMatrix gate_from_spec(const nlohmann::json& spec) {
  const auto kind = spec.at("kind").get<std::string>();
  if (kind == "cnot") return gates::cnot();
  if (kind == "swap") return gates::swap();
  if (kind == "identity") return identity(Eigen::Index{1} << spec.value("qubits", 2));
  if (kind == "syndrome") return syndrome_target();
  if (kind == "haar") {
    RandomSource rng(spec.value<std::uint64_t>("seed", 0));
    return haar_special_unitary(Eigen::Index{1} << spec.value("qubits", 2), rng);
  }
  if (kind == "canonical") {
    const auto c = spec.at("coords_rad").get<std::vector<double>>();
    if (c.size() != 3) throw ModelError("canonical gate needs three coordinates");
    return canonical_gate({c[0], c[1], c[2]});
  }
  if (kind == "cr") {
    return cr_gate(spec.at("pair").get<CrossResonancePair>(), {spec.at("omega_mhz").get<double>(), spec.at("t_ns").get<double>()});
  }
  if (kind == "tpcx") {
    return tpcx(spec.at("pair").get<CrossResonancePair>(), spec.at("omega_mhz").get<double>(), spec.at("t_ns").get<double>());
  }
  if (kind == "four_cr") {
    const auto o = spec.at("omegas_mhz").get<std::vector<double>>();
    if (o.size() != 4) throw ModelError("four_cr needs 4 amplitudes");
    return four_cr_gate(spec.at("device").get<FourQubitDevice>(), {o[0], o[1], o[2], o[3]}, spec.at("t_ns").get<double>());
  }
  throw ModelError("unknown gate kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Source factories for the sweeps.

/// Opposite-phase CR pair [U_CR(-Omega), U_CR(+Omega)]; the +Omega pulse acts first.
inline SourceGateSet cr_echo_sources(const CrossResonancePair& pair, double omega_mhz, double t_ns) {
  return {cr_gate(pair, {-omega_mhz, t_ns}), cr_gate(pair, {omega_mhz, t_ns})};
}

inline SourceGateSet four_cr_sources(const FourQubitDevice& dev, const std::array<double, 4>& omega,
                                     const std::array<int, 2>& signs, double t_ns) {
  SourceGateSet out;
  for (int s : signs) {
    out.push_back(four_cr_gate(dev, {s * omega[0], s * omega[1], s * omega[2], s * omega[3]}, t_ns));
  }
  return out;
}

inline FourQubitDevice with_crosstalk(FourQubitDevice dev, bool on) {
  if (!on) {
    for (auto& q : dev.qubits) {
      q.eps = 0.0;
      q.phi_rad = 0.0;
    }
  }
  return dev;
}

// ---------------------------------------------------------------------------
// Results.

struct SweepRow {
  std::string method;  // "tpcx" or "vqgo"
  std::vector<double> eps;
  std::vector<double> phi_rad;
  std::vector<double> omega_mhz;
  double t_ns = 0.0;
  double agi = 0.0;
  int restarts = 0;
  int iterations = 0;
  bool converged = false;
  bool aborted = false;
  std::vector<double> theta;
};

struct Calibration {
  std::string method;
  std::string case_label;
  std::vector<double> omega_mhz;
  double agi = 0.0;
  int outer_evaluations = 0;
  std::vector<double> reference_omega_mhz;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<Calibration> calibrations;
  std::vector<std::string> notes;  // extra deterministic metadata lines
};

struct CartanRow {
  double c_x = 0.0;
  double c_y = 0.0;
  double c_z = 0.0;
  double entangling_power = 0.0;
  double best_agf = 0.0;
  int restarts = 0;
  std::vector<double> theta;
};

namespace detail {

inline std::string fmt17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string join17(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += fmt17(v[i]);
  }
  return s;
}

inline std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) out.push_back(std::stod(item));
  return out;
}

inline std::uint64_t point_seed(std::uint64_t seed, std::uint64_t stream) { return RandomSource(seed).split(stream).seed(); }

inline SweepRow vqgo_row(const ComplexMatrix& target, const SourceGateSet& sources, OptimizerConfig opt) {
  SweepRow row;
  row.method = "vqgo";
  row.restarts = opt.restarts;
  try {
    const CircuitShape shape{qubit_count(target.rows()), static_cast<int>(sources.size())};
    const auto r = vqgo(target, sources, shape, opt);
    row.agi = r.best_cost;
    row.iterations = r.iterations_used;
    row.converged = r.converged;
    row.restarts = r.restarts_run;
    row.theta.assign(r.best_params.values().begin(), r.best_params.values().end());
  } catch (const OptimizerAbort&) {
    row.aborted = true;
    row.agi = std::numeric_limits<double>::quiet_NaN();
  }
  return row;
}

}  // namespace detail

/// TPCX drive amplitude minimizing the TPCX infidelity at gate time t: a grid
/// scan over the amplitude box followed by a 1-D simplex refinement.
inline std::pair<double, double> calibrate_tpcx(const CrossResonancePair& pair, double t_ns, const AmplitudeBounds& bounds,
                                                double scan_step_mhz) {
  const ComplexMatrix target = gates::cnot();
  auto cost = [&](double omega) { return agi(target, tpcx(pair, omega, t_ns)); };
  double best_omega = bounds.lower_mhz;
  double best = cost(best_omega);
  for (double om = bounds.lower_mhz + scan_step_mhz; om <= bounds.upper_mhz + 1e-9; om += scan_step_mhz) {
    const double c = cost(om);
    if (c < best) {
      best = c;
      best_omega = om;
    }
  }
  OptimizerConfig nm;
  nm.max_iterations = 200;
  nm.cost_tolerance = 1e-14;
  nm.x_tolerance = 1e-6;
  nm.simplex_step = 0.5 * scan_step_mhz / (bounds.upper_mhz - bounds.lower_mhz);
  const auto res = minimize_derivative_free([&](const RealVector& x) { return cost(x(0)); },
                                            RealVector::Constant(1, best_omega),
                                            BoxBounds::uniform(1, bounds.lower_mhz, bounds.upper_mhz), nm);
  return {res.x(0), res.f};
}

/// CNOT from a CR pair: per crosstalk case, calibrate TPCX and VQGO drive
/// amplitudes at calibration_t_ns, then sweep the gate time with amplitudes fixed.
inline SweepResult cmd_cnot_sweep(const ExperimentConfig& cfg) {
  const ComplexMatrix target = gates::cnot();
  const auto times = cfg.sweep.points();
  const std::size_t cases = cfg.crosstalk_cases.size();

  std::vector<double> tpcx_omega(cases), vqgo_omega(cases);
  SweepResult out;
  for (std::size_t c = 0; c < cases; ++c) {
    CrossResonancePair pair = cfg.pair;
    pair.eps = cfg.crosstalk_cases[c].eps;
    pair.phi_rad = cfg.crosstalk_cases[c].phi_rad;
    const std::string label = "eps=" + detail::fmt17(pair.eps);

    const auto [om_t, agi_t] = calibrate_tpcx(pair, cfg.calibration_t_ns, cfg.bounds, cfg.tpcx_scan_step_mhz);
    tpcx_omega[c] = om_t;
    Calibration ct{"tpcx", label, {om_t}, agi_t, 0, {}};
    if (c < cfg.reference_tpcx_omega_mhz.size()) ct.reference_omega_mhz = {cfg.reference_tpcx_omega_mhz[c]};
    out.calibrations.push_back(ct);

    OptimizerConfig inner = cfg.optimizer;
    inner.seed = detail::point_seed(cfg.seed, 1'000'000 + c);
    inner.workers = cfg.workers;
    const auto conc = concatenated_optimize(
        target, [&](const RealVector& om, double t) { return cr_echo_sources(pair, om(0), t); },
        RealVector::Constant(1, cfg.omega0_mhz), cfg.bounds, cfg.calibration_t_ns, inner, cfg.outer);
    vqgo_omega[c] = conc.omega_mhz(0);
    Calibration cv{"vqgo", label, {conc.omega_mhz(0)}, conc.inner.best_cost, conc.outer_evaluations, {}};
    if (c < cfg.reference_vqgo_omega_mhz.size()) cv.reference_omega_mhz = {cfg.reference_vqgo_omega_mhz[c]};
    out.calibrations.push_back(cv);
  }

  const std::size_t per_method = cases * times.size();
  out.rows.resize(2 * per_method);
  parallel_for(2 * per_method, cfg.workers, [&](std::size_t idx) {
    const bool is_vqgo = idx >= per_method;
    const std::size_t rem = idx % per_method;
    const std::size_t c = rem / times.size();
    const double t = times[rem % times.size()];
    CrossResonancePair pair = cfg.pair;
    pair.eps = cfg.crosstalk_cases[c].eps;
    pair.phi_rad = cfg.crosstalk_cases[c].phi_rad;
    SweepRow row;
    if (is_vqgo) {
      OptimizerConfig opt = cfg.optimizer;
      opt.seed = detail::point_seed(cfg.seed, rem);
      row = detail::vqgo_row(target, cr_echo_sources(pair, vqgo_omega[c], t), opt);
      row.omega_mhz = {vqgo_omega[c]};
    } else {
      row.method = "tpcx";
      row.omega_mhz = {tpcx_omega[c]};
      row.agi = agi(target, tpcx(pair, tpcx_omega[c], t));
      row.converged = true;
    }
    row.eps = {pair.eps};
    row.phi_rad = {pair.phi_rad};
    row.t_ns = t;
    out.rows[idx] = std::move(row);
  });
  return out;
}

/// Four-qubit syndrome extraction from two simultaneous-CR source layers.
inline SweepResult cmd_syndrome_sweep(const ExperimentConfig& cfg) {
  const ComplexMatrix target = syndrome_target();
  const auto times = cfg.sweep.points();
  const std::size_t cases = cfg.syndrome_crosstalk.size();
  std::vector<std::array<double, 4>> omegas(cases);
  SweepResult out;

  for (std::size_t c = 0; c < cases; ++c) {
    const FourQubitDevice dev = with_crosstalk(cfg.device, cfg.syndrome_crosstalk[c]);
    OptimizerConfig inner = cfg.optimizer;
    inner.seed = detail::point_seed(cfg.seed, 1'000'000 + c);
    inner.workers = cfg.workers;
    RealVector omega0(4);
    for (int i = 0; i < 4; ++i) omega0(i) = cfg.omega0_4_mhz[i];
    const auto conc = concatenated_optimize(
        target,
        [&](const RealVector& om, double t) {
          return four_cr_sources(dev, {om(0), om(1), om(2), om(3)}, cfg.layer_signs, t);
        },
        omega0, cfg.bounds, cfg.calibration_t_ns, inner, cfg.outer);
    for (int i = 0; i < 4; ++i) omegas[c][i] = conc.omega_mhz(i);
    Calibration cal{"vqgo", cfg.syndrome_crosstalk[c] ? "crosstalk=on" : "crosstalk=off",
                    std::vector<double>(omegas[c].begin(), omegas[c].end()), conc.inner.best_cost,
                    conc.outer_evaluations, cfg.syndrome_crosstalk[c] ? cfg.reference_omega_on_mhz : cfg.reference_omega_off_mhz};
    out.calibrations.push_back(cal);
  }
  out.notes.push_back("source_layers: 2");
  out.notes.push_back("total_source_time_ns_at_calibration: " + detail::fmt17(2.0 * cfg.calibration_t_ns));

  out.rows.resize(cases * times.size());
  parallel_for(out.rows.size(), cfg.workers, [&](std::size_t idx) {
    const std::size_t c = idx / times.size();
    const double t = times[idx % times.size()];
    const FourQubitDevice dev = with_crosstalk(cfg.device, cfg.syndrome_crosstalk[c]);
    OptimizerConfig opt = cfg.optimizer;
    opt.seed = detail::point_seed(cfg.seed, idx);
    SweepRow row = detail::vqgo_row(target, four_cr_sources(dev, omegas[c], cfg.layer_signs, t), opt);
    for (const auto& q : dev.qubits) {
      row.eps.push_back(q.eps);
      row.phi_rad.push_back(q.phi_rad);
    }
    row.omega_mhz.assign(omegas[c].begin(), omegas[c].end());
    row.t_ns = t;
    out.rows[idx] = std::move(row);
  });
  return out;
}

/// Entangling power and best depth-d fidelity to CNOT over a uniform grid on
/// [0, pi/4]^3 of canonical source coordinates.
inline std::vector<CartanRow> cmd_cartan_map(const ExperimentConfig& cfg) {
  const int g = cfg.grid_points;
  const ComplexMatrix target = gates::cnot();
  std::vector<CartanRow> rows(static_cast<std::size_t>(g) * g * g);
  parallel_for(rows.size(), cfg.workers, [&](std::size_t idx) {
    const int ix = static_cast<int>(idx / (g * g));
    const int iy = static_cast<int>((idx / g) % g);
    const int iz = static_cast<int>(idx % g);
    const double step = (kPi / 4.0) / (g - 1);
    CartanRow row;
    row.c_x = ix * step;
    row.c_y = iy * step;
    row.c_z = iz * step;
    const ComplexMatrix source = canonical_gate({row.c_x, row.c_y, row.c_z});
    row.entangling_power = entangling_power(source);
    OptimizerConfig opt = cfg.optimizer;
    opt.seed = detail::point_seed(cfg.seed, idx);
    const auto r = vqgo(target, SourceGateSet(cfg.depth, source), {2, cfg.depth}, opt);
    row.best_agf = 1.0 - r.best_cost;
    row.restarts = r.restarts_run;
    row.theta.assign(r.best_params.values().begin(), r.best_params.values().end());
    rows[idx] = std::move(row);
  });
  return rows;
}

/// One optimization described by target/sources (or a concatenated CR search).
inline nlohmann::json cmd_single_optimize(const ExperimentConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  ComplexMatrix target;
  try {
    target = gate_from_spec(cfg.target_spec);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("target: ") + e.what());
  }
  OptimizerConfig opt = cfg.optimizer;
  opt.seed = cfg.seed;
  opt.workers = cfg.workers;

  nlohmann::json report{{"tool", "vqgo " + std::string(kToolVersion)}, {"experiment", "single_optimize"}, {"seed", cfg.seed}};
  OptimizationResult result;
  if (cfg.sources_spec.is_object()) {
    // Concatenated search over the amplitude of an opposite-phase CR pair.
    CrossResonancePair pair;
    double omega0 = 0.0;
    double t = 0.0;
    try {
      pair = cfg.sources_spec.at("pair").get<CrossResonancePair>();
      omega0 = cfg.sources_spec.at("omega0_mhz").get<double>();
      t = cfg.sources_spec.at("t_ns").get<double>();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("concatenated: ") + e.what());
    }
    const auto conc = concatenated_optimize(
        target, [&](const RealVector& om, double tt) { return cr_echo_sources(pair, om(0), tt); },
        RealVector::Constant(1, omega0), cfg.bounds, t, opt, cfg.outer);
    result = conc.inner;
    report["omega_mhz"] = conc.omega_mhz(0);
    report["outer_evaluations"] = conc.outer_evaluations;
  } else {
    SourceGateSet sources;
    try {
      for (const auto& s : cfg.sources_spec) sources.push_back(gate_from_spec(s));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("sources: ") + e.what());
    }
    const CircuitShape shape{qubit_count(target.rows()), static_cast<int>(sources.size())};
    result = vqgo(target, sources, shape, opt, cfg.backend, cfg.shots);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  report["agi"] = result.best_cost;
  report["theta"] = std::vector<double>(result.best_params.values().begin(), result.best_params.values().end());
  report["qubits"] = result.best_params.shape().qubits;
  report["depth"] = result.best_params.shape().depth;
  report["restart_index"] = result.restart_index;
  report["restarts_run"] = result.restarts_run;
  report["restart_costs"] = result.restart_costs;
  report["iterations"] = result.iterations_used;
  report["converged"] = result.converged;
  report["stop_reason"] = result.stop_reason;
  report["cost_history"] = result.cost_history;
  report["wall_time_s"] = wall;
  report["config"] = cfg.effective;
  return report;
}

// ---------------------------------------------------------------------------
// CSV output.

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline void write_metadata(std::ostream& os, const ExperimentConfig& cfg, const std::string& timestamp) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << config_hash(cfg);
  os << "# tool: vqgo " << kToolVersion << '\n';
  os << "# experiment: " << to_string(cfg.kind) << '\n';
  os << "# seed: " << cfg.seed << '\n';
  os << "# config_hash: " << hash.str() << '\n';
  os << "# generated: " << timestamp << '\n';
  os << "# config: " << cfg.effective.dump() << '\n';
}

inline const char* kSweepHeader = "method,eps,phi_rad,omega_mhz,t_ns,agi,restarts,iterations,converged,theta";
inline const char* kCartanHeader = "c_x,c_y,c_z,entangling_power,best_agf,restarts,theta";

inline void write_sweep_csv(std::ostream& os, const ExperimentConfig& cfg, const SweepResult& result,
                            const std::string& timestamp) {
  write_metadata(os, cfg, timestamp);
  for (const auto& c : result.calibrations) {
    os << "# calibration: method=" << c.method << ' ' << c.case_label << " t_ns=" << detail::fmt17(cfg.calibration_t_ns)
       << " omega_mhz=" << detail::join17(c.omega_mhz) << " agi=" << detail::fmt17(c.agi)
       << " outer_evaluations=" << c.outer_evaluations;
    if (!c.reference_omega_mhz.empty()) os << " reference_omega_mhz=" << detail::join17(c.reference_omega_mhz);
    os << '\n';
  }
  for (const auto& n : result.notes) os << "# " << n << '\n';
  os << kSweepHeader << '\n';
  for (const auto& r : result.rows) {
    os << r.method << ',' << detail::join17(r.eps) << ',' << detail::join17(r.phi_rad) << ','
       << detail::join17(r.omega_mhz) << ',' << detail::fmt17(r.t_ns) << ',' << detail::fmt17(r.agi) << ','
       << r.restarts << ',' << r.iterations << ',' << (r.aborted ? "abort" : (r.converged ? "true" : "false")) << ','
       << detail::join17(r.theta) << '\n';
  }
}

inline void write_cartan_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<CartanRow>& rows,
                             const std::string& timestamp) {
  write_metadata(os, cfg, timestamp);
  os << kCartanHeader << '\n';
  for (const auto& r : rows) {
    os << detail::fmt17(r.c_x) << ',' << detail::fmt17(r.c_y) << ',' << detail::fmt17(r.c_z) << ','
       << detail::fmt17(r.entangling_power) << ',' << detail::fmt17(r.best_agf) << ',' << r.restarts << ','
       << detail::join17(r.theta) << '\n';
  }
}

/// Lines of a CSV document that are not '#' metadata.
inline std::string csv_body(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::string body;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    body += line;
    body += '\n';
  }
  return body;
}

/// Runs the configured experiment and returns the CSV (or JSON report) text.
inline std::string run_experiment(const ExperimentConfig& cfg, const std::string& timestamp = utc_timestamp()) {
  std::ostringstream os;
  switch (cfg.kind) {
    case ExperimentKind::cnot_sweep: write_sweep_csv(os, cfg, cmd_cnot_sweep(cfg), timestamp); break;
    case ExperimentKind::syndrome_sweep: write_sweep_csv(os, cfg, cmd_syndrome_sweep(cfg), timestamp); break;
    case ExperimentKind::cartan_map: write_cartan_csv(os, cfg, cmd_cartan_map(cfg), timestamp); break;
    case ExperimentKind::single_optimize: {
      auto report = cmd_single_optimize(cfg);
      report["generated"] = timestamp;
      os << report.dump(2) << '\n';
      break;
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Verification: recompute every row's infidelity from its stored parameters.

struct VerifyReport {
  std::size_t rows = 0;
  std::size_t mismatches = 0;
  double max_error = 0.0;
  std::vector<std::string> messages;
};

inline VerifyReport verify_csv(const std::string& csv, double tolerance = 1e-9) {
  std::istringstream in(csv);
  std::string line;
  std::optional<ExperimentConfig> cfg;
  std::vector<std::string> header;
  VerifyReport report;
  int line_no = 0;

  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("# config: ", 0) == 0) {
      cfg = parse_config(line.substr(10));
      continue;
    }
    if (line[0] == '#') continue;
    if (header.empty()) {
      header = split(line);
      continue;
    }
    if (!cfg) throw ConfigError("verify: CSV has no '# config:' metadata line", line_no);
    const auto cells = split(line);
    if (cells.size() != header.size()) throw ConfigError("verify: wrong column count", line_no);
    std::map<std::string, std::string> row;
    for (std::size_t k = 0; k < header.size(); ++k) row[header[k]] = cells[k];

    double stated = 0.0;
    double recomputed = 0.0;
    if (cfg->kind == ExperimentKind::cartan_map) {
      const double cx = std::stod(row["c_x"]), cy = std::stod(row["c_y"]), cz = std::stod(row["c_z"]);
      const auto theta = detail::split_doubles(row["theta"]);
      const ComplexMatrix source = canonical_gate({cx, cy, cz});
      const CircuitParams p({2, cfg->depth}, theta);
      stated = std::stod(row["best_agf"]);
      recomputed = 1.0 - agi_cost(p, SourceGateSet(cfg->depth, source), gates::cnot());
    } else {
      if (row["converged"] == "abort") continue;
      const auto eps = detail::split_doubles(row["eps"]);
      const auto phi = detail::split_doubles(row["phi_rad"]);
      const auto omega = detail::split_doubles(row["omega_mhz"]);
      const double t = std::stod(row["t_ns"]);
      stated = std::stod(row["agi"]);
      if (cfg->kind == ExperimentKind::cnot_sweep) {
        CrossResonancePair pair = cfg->pair;
        pair.eps = eps.at(0);
        pair.phi_rad = phi.at(0);
        if (row["method"] == "tpcx") {
          recomputed = agi(gates::cnot(), tpcx(pair, omega.at(0), t));
        } else {
          const CircuitParams p({2, 2}, detail::split_doubles(row["theta"]));
          recomputed = agi_cost(p, cr_echo_sources(pair, omega.at(0), t), gates::cnot());
        }
      } else if (cfg->kind == ExperimentKind::syndrome_sweep) {
        FourQubitDevice dev = cfg->device;
        for (int i = 0; i < 4; ++i) {
          dev.qubits[i].eps = eps.at(i);
          dev.qubits[i].phi_rad = phi.at(i);
        }
        const CircuitParams p({5, 2}, detail::split_doubles(row["theta"]));
        recomputed = agi_cost(p, four_cr_sources(dev, {omega.at(0), omega.at(1), omega.at(2), omega.at(3)}, cfg->layer_signs, t),
                              syndrome_target());
      } else {
        throw ConfigError("verify: experiment kind has no CSV rows");
      }
    }
    ++report.rows;
    const double err = std::abs(stated - recomputed);
    report.max_error = std::max(report.max_error, err);
    if (!(err <= tolerance)) {
      ++report.mismatches;
      report.messages.push_back("line " + std::to_string(line_no) + ": stated " + detail::fmt17(stated) +
                                ", recomputed " + detail::fmt17(recomputed));
    }
  }
  if (!cfg) throw ConfigError("verify: CSV has no '# config:' metadata line");
  return report;
}

}  // namespace vqgo
