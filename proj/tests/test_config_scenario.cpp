// Copyright 2026 The chainbath developers
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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "chainbath/scenario.hpp"

using namespace chainbath;
namespace fs = std::filesystem;

namespace {

ScenarioConfig parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// quick scenario: cheap quadrature, few time points
ScenarioConfig quick_config(const std::string& dir) {
  ScenarioConfig cfg = parse_string("");
  cfg.quadrature.check_convergence = false;
  cfg.time_grid.points = 12;
  cfg.time_grid.t_max = 1e4;
  cfg.outputs.directory = dir;
  return cfg;
}

}  // namespace

TEST(Config, EmptyFileGivesReferenceDefaults) {
  auto cfg = parse_string("");
  EXPECT_EQ(cfg.chain.n_qubits, 3);
  EXPECT_EQ(cfg.chain.h, 4.0);
  EXPECT_EQ(cfg.chain.epsilon, 0.1);
  EXPECT_EQ(cfg.chain.g, 50.0);
  EXPECT_EQ(cfg.chain.mass, 0.1);
  EXPECT_EQ(cfg.chain.beta, 0.1);
  EXPECT_EQ(cfg.chain.sigma_p, 0.5);
  EXPECT_EQ(cfg.chain.gamma, 1.0);
  EXPECT_TRUE(cfg.variant == Variant::Exact);
  EXPECT_EQ(cfg.initial_state, "ground");
  EXPECT_EQ(cfg.quadrature.panels, 8);
  EXPECT_EQ(cfg.quadrature.nodes, 32);
  EXPECT_EQ(cfg.quadrature.W, 40.0);
  EXPECT_EQ(cfg.quadrature.tol_quad, 1e-7);
  EXPECT_FALSE(cfg.sweep.has_value());
}

TEST(Config, ParsesSectionsAndValues) {
  auto cfg = parse_string(R"(
# comment
[chain]
n_qubits = 2
epsilon = 0.003
[run]
variant = narrow
initial_state = 10
[time_grid]
kind = linear
t_min = 0
t_max = 50
points = 11
[outputs]
directory = some/dir
emit_plots = true
observables = populations, band_ratio
)");
  EXPECT_EQ(cfg.chain.n_qubits, 2);
  EXPECT_EQ(cfg.chain.epsilon, 0.003);
  EXPECT_TRUE(cfg.variant == Variant::Narrow);
  EXPECT_EQ(cfg.initial_state, "10");
  EXPECT_EQ(cfg.time_grid.kind, "linear");
  EXPECT_EQ(cfg.time_grid.points, 11);
  EXPECT_TRUE(cfg.outputs.emit_plots);
  ASSERT_EQ(cfg.outputs.observables.size(), 2u);
  EXPECT_EQ(cfg.outputs.observables[1], "band_ratio");
  auto grid = cfg.time_grid.grid();
  EXPECT_EQ(grid.size(), 11u);
  EXPECT_NEAR(grid[1] - grid[0], 5.0, 1e-12);
}

TEST(Config, SweepValuesKeepFileOrder) {
  auto cfg = parse_string("[sweep]\nparameter = epsilon\nvalues = 1e-1, 1e-2, 1e-3\n");
  ASSERT_TRUE(cfg.sweep.has_value());
  EXPECT_EQ(cfg.sweep->parameter, "epsilon");
  ASSERT_EQ(cfg.sweep->values.size(), 3u);
  EXPECT_EQ(cfg.sweep->values[0], 0.1);
  EXPECT_EQ(cfg.sweep->values[2], 0.001);
}

TEST(Config, RejectsInvalidPhysicalValues) {
  EXPECT_THROW(parse_string("[chain]\nepsilon = -1\n"), ValidationError);
  EXPECT_THROW(parse_string("[time_grid]\nt_min = 5\nt_max = 2\n"), ValidationError);
  EXPECT_THROW(parse_string("[time_grid]\npoints = 1\n"), ValidationError);
  EXPECT_THROW(parse_string("[sweep]\nparameter = epsilon\n"), ValidationError);
}

TEST(Config, StrictParseErrors) {
  try {
    parse_string("[chain]\nn_qubits = 3\nmystery = 1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(parse_string("[unknown_section]\n"), ParseError);
  EXPECT_THROW(parse_string("orphan = 1\n"), ParseError);
  EXPECT_THROW(parse_string("[chain]\nh = abc\n"), ParseError);
  EXPECT_THROW(parse_string("[outputs]\nemit_plots = maybe\n"), ParseError);
  EXPECT_THROW(parse_string("[chain\n"), ParseError);
  EXPECT_THROW(parse_string("[run]\nvariant = bogus\n"), ValidationError);
}

TEST(Scenario, ZeroCouplingRunKeepsPopulationsConstant) {
  auto cfg = quick_config("scen_g0");
  cfg.chain.g = 0.0;
  auto manifest = run_scenario(cfg, 2);
  EXPECT_EQ(manifest.status, "ok");
  bool noted = false;
  for (const auto& note : manifest.notes) noted |= note.find("identity tensor") != std::string::npos;
  EXPECT_TRUE(noted);

  // ground-state populations stay put
  std::ifstream traj("scen_g0/trajectory.csv");
  std::string line;
  int rows = 0;
  while (std::getline(traj, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');  // t
    std::getline(ls, cell, ',');  // rho_00
    EXPECT_NEAR(std::stod(cell), 1.0, 1e-10);
    ++rows;
  }
  EXPECT_EQ(rows, cfg.time_grid.points);
}

TEST(Scenario, ProducesAllArtifactsAndConsistentManifest) {
  auto cfg = quick_config("scen_default");
  auto manifest = run_scenario(cfg, 2);
  EXPECT_EQ(manifest.status, "ok");
  for (const char* name : {"tensor.txt", "trajectory.csv", "steady.csv", "classify.txt",
                           "manifest.txt"}) {
    EXPECT_TRUE(fs::exists(fs::path("scen_default") / name)) << name;
  }

  // manifest residuals must match a recomputation from the persisted tensor
  auto tensor = load_tensor("scen_default/tensor.txt");
  auto spectrum = diagonalize(cfg.chain);
  EXPECT_NEAR(manifest.residuals.at("tp_defect"), tensor.trace_preservation_defect(), 1e-12);
  EXPECT_NEAR(manifest.residuals.at("choi_min_eigenvalue"), min_eigenvalue(tensor.choi()),
              1e-12);
  EXPECT_NEAR(manifest.residuals.at("detailed_balance"),
              check_detailed_balance(tensor, spectrum, cfg.chain.beta), 1e-12);

  // and the recorded checksum matches the file
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a_file("scen_default/tensor.txt")));
  EXPECT_EQ(manifest.checksums.at("tensor.txt"), std::string(buf));
}

TEST(Scenario, DeterministicAcrossRunsAndWorkerCounts) {
  auto cfg1 = quick_config("scen_det1");
  auto cfg2 = quick_config("scen_det2");
  run_scenario(cfg1, 1);
  run_scenario(cfg2, 2);
  EXPECT_EQ(slurp("scen_det1/trajectory.csv"), slurp("scen_det2/trajectory.csv"));
  EXPECT_EQ(slurp("scen_det1/tensor.txt"), slurp("scen_det2/tensor.txt"));
  EXPECT_EQ(slurp("scen_det1/steady.csv"), slurp("scen_det2/steady.csv"));
}

TEST(Scenario, LocalBitStringInitialState) {
  auto cfg = quick_config("scen_bits");
  cfg.initial_state = "100";
  cfg.variant = Variant::Local;
  auto manifest = run_scenario(cfg, 2);
  EXPECT_EQ(manifest.status, "ok");
  EXPECT_GT(manifest.residuals.count("sum_rule"), 0u);
  EXPECT_LT(manifest.residuals.at("sum_rule"), 1e-6);
}

TEST(Scenario, RejectsBadInitialState) {
  auto cfg = quick_config("scen_bad");
  cfg.initial_state = "no_such_file_or_bits";
  EXPECT_THROW(run_scenario(cfg, 1), ValidationError);
}

TEST(Scenario, SweepWritesSubdirectoriesAndCombinedRatios) {
  auto cfg = quick_config("scen_sweep");
  cfg.sweep = SweepConfig{"epsilon", {0.1, 0.01}};
  cfg.quadrature.nodes = 24;
  auto manifest = run_sweep(cfg, 2);
  EXPECT_EQ(manifest.status, "ok");
  EXPECT_TRUE(fs::exists("scen_sweep/epsilon_0.1/trajectory.csv"));
  EXPECT_TRUE(fs::exists("scen_sweep/epsilon_0.01/trajectory.csv"));
  const std::string combined = slurp("scen_sweep/ratio_sweep.csv");
  EXPECT_NE(combined.find("t,ratio_0.1,ratio_0.01"), std::string::npos);
  EXPECT_NE(combined.find("# reference_local_ratio 0.67032004603563"), std::string::npos);
  EXPECT_NE(combined.find("# reference_global_ratio 2.01096013810691"), std::string::npos);
  // one data row per grid point
  int rows = 0;
  std::istringstream in(combined);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line[0] != 't') ++rows;
  EXPECT_EQ(rows, cfg.time_grid.points);
}

TEST(Scenario, UnknownFigureRejected) {
  auto cfg = quick_config("scen_fig");
  EXPECT_THROW(reproduce_figure("fig9", cfg, 1), UnknownFigure);
}

TEST(Scenario, ReproduceIntraBandContrastFigure) {
  auto cfg = quick_config("scen_fig4");
  cfg.quadrature.check_convergence = false;
  reproduce_figure("fig4", cfg, 2);
  EXPECT_TRUE(fs::exists("scen_fig4/fig4_exact/trajectory.csv"));
  EXPECT_TRUE(fs::exists("scen_fig4/fig4_local/trajectory.csv"));
  EXPECT_TRUE(fs::exists("scen_fig4/manifest_fig4.txt"));
  // within the first band the decoupled-chain dissipator equalizes the late
  // populations while the exact map splits them thermally
  auto spectrum = diagonalize(cfg.chain);
  const auto last_row = [](const std::string& path) {
    std::ifstream in(path);
    std::string line, last;
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#' && line[0] != 't') last = line;
    std::vector<double> row;
    std::istringstream ls(last);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    return row;
  };
  auto local_row = last_row("scen_fig4/fig4_local/trajectory.csv");
  auto exact_row = last_row("scen_fig4/fig4_exact/trajectory.csv");
  // columns: t, rho_00..rho_77, ...
  EXPECT_NEAR(local_row[2], local_row[3], 1e-6);
  EXPECT_NEAR(local_row[2], local_row[4], 1e-6);
  EXPECT_GT(exact_row[2], exact_row[3]);
  EXPECT_GT(exact_row[3], exact_row[4]);
}

TEST(Scenario, EmitPlotsWritesSvg) {
  auto cfg = quick_config("scen_svg");
  cfg.outputs.emit_plots = true;
  run_scenario(cfg, 2);
  EXPECT_TRUE(fs::exists("scen_svg/populations.svg"));
  const std::string svg = slurp("scen_svg/populations.svg");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
}
