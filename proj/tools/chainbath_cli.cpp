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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "chainbath/scenario.hpp"

namespace {

using namespace chainbath;

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::string variant;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  unsigned seed = 0;  // reserved; the dynamics is deterministic
};

ScenarioConfig load_config(const CommonOptions& opt) {
  ScenarioConfig cfg;
  if (!opt.config_path.empty()) {
    cfg = parse_config(opt.config_path);
  } else {
    std::istringstream empty("");
    cfg = parse_config(empty);
  }
  if (!opt.out_dir.empty()) cfg.outputs.directory = opt.out_dir;
  if (!opt.variant.empty()) cfg.variant = variant_from_name(opt.variant);
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "scenario config file");
  cmd->add_option("--out", opt.out_dir, "output directory (overrides config)");
  cmd->add_option("--variant", opt.variant,
                  "collision map variant: exact | narrow | band_resolved | local");
  cmd->add_option("--threads", opt.threads, "worker threads for assembly and sweeps");
  cmd->add_option("--seed", opt.seed, "reserved, unused");
}

int cmd_spectrum(const CommonOptions& opt) {
  auto cfg = load_config(opt);
  auto spectrum = diagonalize(cfg.chain);
  std::filesystem::create_directories(cfg.outputs.directory);
  const auto path = std::filesystem::path(cfg.outputs.directory) / "spectrum.csv";
  std::ofstream out(path);
  out << "# chainbath spectrum, format_version 1\n";
  out << "j,energy,excitations,local_energy\n";
  for (int j = 0; j < spectrum.dim(); ++j)
    out << j << ',' << format_number(spectrum.energies[j]) << ',' << spectrum.excitations[j]
        << ',' << format_number(spectrum.local_energies[j]) << "\n";
  std::cout << path.string() << "\n";
  return 0;
}

int cmd_tensor(const CommonOptions& opt) {
  auto cfg = load_config(opt);
  auto spectrum = diagonalize(cfg.chain);
  auto tensor = assemble_tensor(cfg.chain, spectrum, cfg.variant, cfg.quadrature,
                                KernelModel::Effusion, opt.threads);
  std::filesystem::create_directories(cfg.outputs.directory);
  const auto path = std::filesystem::path(cfg.outputs.directory) / "tensor.txt";
  save_tensor(path.string(), tensor);
  std::cout << path.string() << "\n";
  std::cout << "tp_defect " << format_number(tensor.quad.tp_defect) << "\n";
  std::cout << "choi_min " << format_number(tensor.quad.choi_min) << "\n";
  std::cout << "detailed_balance "
            << format_number(check_detailed_balance(tensor, spectrum, cfg.chain.beta)) << "\n";
  return 0;
}

int cmd_evolve(const CommonOptions& opt) {
  auto cfg = load_config(opt);
  auto manifest = run_scenario(cfg, opt.threads);
  std::cout << cfg.outputs.directory << "/manifest.txt (" << manifest.status << ")\n";
  return manifest.status == "ok" ? 0 : 1;
}

int cmd_steady(const CommonOptions& opt) {
  auto cfg = load_config(opt);
  auto spectrum = diagonalize(cfg.chain);
  auto tensor = assemble_tensor(cfg.chain, spectrum, cfg.variant, cfg.quadrature,
                                KernelModel::Effusion, opt.threads);
  Matrix h = spectrum.energies.cast<cxd>().asDiagonal();
  auto steady = steady_state(poisson_generator(h, tensor, cfg.chain.gamma));
  std::filesystem::create_directories(cfg.outputs.directory);
  const auto path = std::filesystem::path(cfg.outputs.directory) / "steady.csv";
  detail::write_state_csv(path.string(), steady.data, spectrum,
                          {"steady state, variant " + variant_name(cfg.variant)});
  std::cout << path.string() << "\n";
  return 0;
}

int cmd_classify(const CommonOptions& opt) {
  auto cfg = load_config(opt);
  auto spectrum = diagonalize(cfg.chain);
  auto tensor = assemble_tensor(cfg.chain, spectrum, cfg.variant, cfg.quadrature,
                                KernelModel::Effusion, opt.threads);
  auto report = classify_tensor(tensor, spectrum, cfg.chain);
  std::filesystem::create_directories(cfg.outputs.directory);
  const auto path = std::filesystem::path(cfg.outputs.directory) / "classify.txt";
  std::ofstream out(path);
  out << to_text(report);
  std::cout << to_text(report);
  return 0;
}

int cmd_sweep(const CommonOptions& opt) {
  auto cfg = load_config(opt);
  auto manifest = run_sweep(cfg, opt.threads);
  std::cout << cfg.outputs.directory << "/ratio_sweep.csv (" << manifest.status << ")\n";
  return manifest.status == "ok" ? 0 : 1;
}

int cmd_reproduce(const CommonOptions& opt, const std::string& figure) {
  auto cfg = load_config(opt);
  auto manifest = reproduce_figure(figure, cfg, opt.threads);
  std::cout << cfg.outputs.directory << ": " << manifest.artifacts.size()
            << " artifacts for " << figure << "\n";
  return manifest.status == "ok" ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qubit-chain collisional reservoir simulator"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::string figure = "fig2";

  auto* spectrum = app.add_subcommand("spectrum", "diagonalize the chain Hamiltonian");
  add_common(spectrum, opt);
  auto* tensor = app.add_subcommand("tensor", "assemble and persist the collision tensor");
  add_common(tensor, opt);
  auto* evolve = app.add_subcommand("evolve", "run the full pipeline and write a trajectory");
  add_common(evolve, opt);
  auto* steady = app.add_subcommand("steady", "compute the stationary state");
  add_common(steady, opt);
  auto* classify = app.add_subcommand("classify", "classify the collision map");
  add_common(classify, opt);
  auto* sweep = app.add_subcommand("sweep", "run the sweep axis of the config");
  add_common(sweep, opt);
  auto* reproduce = app.add_subcommand("reproduce", "emit the reference figure datasets");
  add_common(reproduce, opt);
  reproduce->add_option("--figure", figure, "fig2 | fig3 | fig4")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (spectrum->parsed()) return cmd_spectrum(opt);
    if (tensor->parsed()) return cmd_tensor(opt);
    if (evolve->parsed()) return cmd_evolve(opt);
    if (steady->parsed()) return cmd_steady(opt);
    if (classify->parsed()) return cmd_classify(opt);
    if (sweep->parsed()) return cmd_sweep(opt);
    if (reproduce->parsed()) return cmd_reproduce(opt, figure);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
