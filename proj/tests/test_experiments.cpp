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

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "vqgo/cli.hpp"
#include "vqgo/experiments.hpp"

namespace vqgo {
namespace {

namespace fs = std::filesystem;

const fs::path kSource = VQGO_SOURCE_DIR;

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "vqgo_test_experiments";
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto path = scratch_dir() / name;
  std::ofstream(path) << text;
  return path.string();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VQGO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv_body(csv));
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

const char* kSmallCnot = R"({
  "experiment": "cnot_sweep",
  "seed": 5,
  "device": {"delta_mhz": 200.0, "g_mhz": 5.0, "reference_tpcx_omega_mhz": [63.5, 69.2]},
  "crosstalk_cases": [{"eps": 0.0, "phi_rad": 0.7853981633974483}, {"eps": 1.0, "phi_rad": 0.7853981633974483}],
  "sweep": {"t_start_ns": 0.0, "t_stop_ns": 150.0, "t_step_ns": 75.0},
  "omega0_mhz": 80.0,
  "tpcx_scan_step_mhz": 5.0,
  "optimizer": {"restarts": 2},
  "outer": {"max_evaluations": 6}
})";

TEST(SweepGrid, RowArithmetic) {
  EXPECT_EQ((SweepGrid{0, 750, 7.5}.points().size()), 101u);
  EXPECT_EQ((SweepGrid{0, 750, 1}.points().size()), 751u);
  EXPECT_EQ((SweepGrid{0, 150, 75}.points()), (std::vector<double>{0, 75, 150}));
}

TEST(Config, Defaults) {
  const auto cfg = parse_config(R"({"experiment": "cnot_sweep"})");
  EXPECT_EQ(cfg.crosstalk_cases.size(), 3u);
  EXPECT_EQ(cfg.sweep.points().size(), 101u);
  EXPECT_EQ(cfg.optimizer.restarts, 8);
  EXPECT_EQ(cfg.calibration_t_ns, 75.0);
  const auto cartan = parse_config(R"({"experiment": "cartan_map"})");
  EXPECT_EQ(cartan.grid_points, 9);
  EXPECT_EQ(cartan.optimizer.restarts, 3);
}

TEST(Config, DiagnosticsCarryLineNumbers) {
  try {
    parse_config("{\n  \"experiment\": \"cnot_sweep\",\n  \"seed\": 1,\n  \"omega0_mhz\": \"fast\"\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 4);
    EXPECT_NE(std::string(e.what()).find("omega0_mhz"), std::string::npos);
  }
  try {
    parse_config("{\n  \"experiment\": \"cnot_sweep\",\n  \"seed\": 1,,\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  try {
    parse_config("{\n \"experiment\": \"plot\"\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(parse_config(R"({"experiment": "cartan_map", "grid_points": 1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"experiment": "cnot_sweep", "sweep": {"t_step_ns": 0}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"experiment": "syndrome_sweep"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"experiment": "cnot_sweep", "device": {"delta_mhz": 1, "g_mhz": 1, "eps": -1}})"),
               ConfigError);
}

TEST(Config, DeviceFileIsInlined) {
  const auto cfg = load_config(kSource / "configs" / "syndrome_sweep.json");
  EXPECT_EQ(cfg.device.qubits[2].delta_mhz, 236.0);
  EXPECT_TRUE(cfg.effective.contains("device"));
  EXPECT_FALSE(cfg.effective.contains("device_file"));
  EXPECT_EQ(cfg.reference_omega_on_mhz.size(), 4u);
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& entry : fs::directory_iterator(kSource / "configs")) {
    EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
  }
}

TEST(Config, HashTracksContent) {
  auto a = parse_config(kSmallCnot);
  auto b = parse_config(kSmallCnot);
  EXPECT_EQ(config_hash(a), config_hash(b));
  set_seed(b, 6);
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(CnotSweep, RowsDeterminismAndVerify) {
  const auto cfg = parse_config(kSmallCnot);
  const auto result = cmd_cnot_sweep(cfg);
  ASSERT_EQ(result.rows.size(), 2u * 2u * 3u);
  ASSERT_EQ(result.calibrations.size(), 4u);
  for (const auto& r : result.rows) {
    EXPECT_GE(r.agi, 0.0);
    EXPECT_LE(r.agi, 1.0);
    if (r.method == "vqgo") {
      EXPECT_EQ(r.theta.size(), 18u);
    }
  }
  // vqgo beats tpcx at the calibration time.
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& tp = result.rows[c * 3 + 1];
    const auto& vq = result.rows[6 + c * 3 + 1];
    EXPECT_EQ(tp.t_ns, 75.0);
    EXPECT_LT(vq.agi, tp.agi);
  }

  const std::string csv = run_experiment(cfg, "T0");
  auto cfg_parallel = cfg;
  set_workers(cfg_parallel, 3);
  const std::string csv2 = run_experiment(cfg_parallel, "T1");
  EXPECT_EQ(csv_body(csv), csv_body(csv2));
  EXPECT_NE(csv, csv2);
  const auto lines = data_lines(csv);
  EXPECT_EQ(lines.front(), kSweepHeader);
  EXPECT_EQ(lines.size(), 13u);
  EXPECT_NE(csv.find("# config_hash: "), std::string::npos);
  EXPECT_NE(csv.find("# tool: vqgo "), std::string::npos);
  EXPECT_NE(csv.find("reference_omega_mhz="), std::string::npos);

  const auto report = verify_csv(csv);
  EXPECT_EQ(report.rows, 12u);
  EXPECT_EQ(report.mismatches, 0u);

  // Tampering with one stored value is detected.
  std::string tampered = csv;
  const auto pos = tampered.rfind(",false,");
  const auto pos2 = tampered.rfind(",true,");
  const auto at = std::max(pos == std::string::npos ? 0 : pos, pos2 == std::string::npos ? 0 : pos2);
  ASSERT_GT(at, 0u);
  const auto agi_start = tampered.rfind(',', tampered.rfind(',', tampered.rfind(',', at - 1) - 1) - 1) + 1;
  tampered.replace(agi_start, tampered.find(',', agi_start) - agi_start, "0.5");
  EXPECT_GT(verify_csv(tampered).mismatches, 0u);
}

TEST(CartanMap, SmallGrid) {
  auto cfg = parse_config(R"({"experiment": "cartan_map", "grid_points": 2, "optimizer": {"restarts": 3}})");
  const auto rows = cmd_cartan_map(cfg);
  ASSERT_EQ(rows.size(), 8u);
  // Corners reduce to local gates (up to SWAP); the best local approximation
  // of CNOT is S (x) exp(-i pi/4 X) with |Tr|^2 = 8, i.e. AGF 3/5.
  const ComplexMatrix best_local = kron(gates::phase_s(), gates::pauli_rotation(1, kPi / 4));
  EXPECT_NEAR(agf_unitary(gates::cnot(), best_local), 0.6, 1e-12);
  RandomSource rng(9);
  for (int k = 0; k < 1000; ++k) {
    EXPECT_LE(agf_unitary(gates::cnot(), kron(haar_unitary(2, rng), haar_unitary(2, rng))), 0.6 + 1e-12);
  }
  EXPECT_NEAR(rows.front().entangling_power, 0.0, 1e-12);
  EXPECT_NEAR(rows.front().best_agf, 0.6, 1e-6);
  EXPECT_NEAR(rows.back().entangling_power, 0.0, 1e-12);
  EXPECT_NEAR(rows.back().best_agf, 0.6, 1e-6);
  const auto& cnot_like = rows[4];  // (pi/4, 0, 0)
  EXPECT_NEAR(cnot_like.c_x, kPi / 4, 1e-15);
  EXPECT_EQ(cnot_like.c_y, 0.0);
  EXPECT_GT(cnot_like.best_agf, 0.9999);
  const std::string csv = run_experiment(cfg, "T");
  EXPECT_EQ(verify_csv(csv).mismatches, 0u);
  EXPECT_EQ(data_lines(csv).size(), 9u);
}

TEST(SingleOptimize, CnotFromCnot) {
  const auto cfg = parse_config(R"({"experiment": "single_optimize", "seed": 3,
    "target": {"kind": "cnot"}, "sources": [{"kind": "cnot"}]})");
  const auto report = cmd_single_optimize(cfg);
  EXPECT_LT(report.at("agi").get<double>(), 1e-10);
  EXPECT_EQ(report.at("seed").get<std::uint64_t>(), 3u);
  EXPECT_TRUE(report.contains("cost_history"));
  EXPECT_TRUE(report.contains("wall_time_s"));
  EXPECT_EQ(report.at("theta").size(), 12u);
}

TEST(SingleOptimize, HaarTargetDepthThree) {
  const auto cfg = parse_config(R"({"experiment": "single_optimize", "seed": 1,
    "target": {"kind": "haar", "seed": 12},
    "sources": [{"kind": "cnot"}, {"kind": "cnot"}, {"kind": "cnot"}]})");
  EXPECT_LT(cmd_single_optimize(cfg).at("agi").get<double>(), 1e-6);
}

TEST(SingleOptimize, BadGateSpecIsConfigError) {
  const auto cfg = parse_config(R"({"experiment": "single_optimize", "target": {"kind": "toffoli"},
    "sources": [{"kind": "cnot"}]})");
  EXPECT_THROW(cmd_single_optimize(cfg), ConfigError);
}

TEST(Cli, ExitCodes) {
  const auto bad = write_file("bad.json", "{\n  \"experiment\": \"cnot_sweep\",\n  \"seed\": ,\n}\n");
  EXPECT_EQ(run_cli("--config " + bad), 1);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("--config " + (scratch_dir() / "missing.json").string()), 2);

  const auto good = write_file("single.json", R"({"experiment": "single_optimize", "seed": 2,
    "target": {"kind": "cnot"}, "sources": [{"kind": "cnot"}], "optimizer": {"restarts": 1}})");
  EXPECT_EQ(run_cli("--config " + good + " --output /nonexistent_dir/x.json"), 2);
  const auto out = scratch_dir() / "single_report.json";
  EXPECT_EQ(run_cli("--config " + good + " --seed 9 --output " + out.string()), 0);
  const auto report = nlohmann::json::parse(read_file(out));
  EXPECT_EQ(report.at("seed").get<std::uint64_t>(), 9u);
  EXPECT_LT(report.at("agi").get<double>(), 1e-10);
}

TEST(Cli, DiagnosticNamesLine) {
  const auto bad = write_file("bad_value.json", "{\n  \"experiment\": \"cartan_map\",\n  \"grid_points\": 1\n}\n");
  std::ostringstream out, err;
  std::string a0 = "vqgo", a1 = "--config", a2 = bad;
  char* argv[] = {a0.data(), a1.data(), a2.data()};
  EXPECT_EQ(cli_main(3, argv, out, err), 1);
  EXPECT_NE(err.str().find(bad + ":3:"), std::string::npos) << err.str();
}

TEST(Cli, SweepAndVerifyRoundTrip) {
  const auto cfg_path = write_file("cartan.json", R"({"experiment": "cartan_map", "grid_points": 2, "seed": 4,
    "optimizer": {"restarts": 2}})");
  const auto csv_path = scratch_dir() / "cartan.csv";
  ASSERT_EQ(run_cli("--config " + cfg_path + " --workers 2 --output " + csv_path.string()), 0);
  EXPECT_EQ(run_cli("--verify " + csv_path.string()), 0);
  std::string text = read_file(csv_path);
  const auto pos = text.find("\n0,0,0,");
  ASSERT_NE(pos, std::string::npos);
  // Corrupt best_agf of the first row.
  const auto agf_start = text.find(',', text.find(',', text.find(',', text.find(',', pos + 1) + 1) + 1) + 1) + 1;
  text.replace(agf_start, 1, "7");
  const auto tampered = write_file("cartan_tampered.csv", text);
  EXPECT_EQ(run_cli("--verify " + tampered), 3);
}

}  // namespace
}  // namespace vqgo
