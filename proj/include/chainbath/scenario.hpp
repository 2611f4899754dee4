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

#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chainbath/analysis.hpp"
#include "chainbath/chain.hpp"
#include "chainbath/collision.hpp"
#include "chainbath/config.hpp"
#include "chainbath/dynamics.hpp"

namespace chainbath {

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// shorter form for directory names and column labels
inline std::string format_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash " + path);
  uint64_t hash = 1469598103934665603ull;
  char c;
  while (in.get(c)) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

struct RunManifest {
  int format_version = 1;
  std::string status = "ok";
  std::vector<std::string> config_echo;
  std::map<std::string, std::string> checksums;  // file -> fnv1a hex
  std::map<std::string, double> residuals;
  std::map<std::string, double> timings_s;
  std::vector<std::string> artifacts;
  std::vector<std::string> notes;
};

inline void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path);
  out << "format_version: " << m.format_version << "\n";
  out << "status: " << m.status << "\n";
  for (const auto& line : m.config_echo) out << "config." << line << "\n";
  for (const auto& [key, value] : m.residuals)
    out << "residual." << key << ": " << format_number(value) << "\n";
  for (const auto& [key, value] : m.timings_s)
    out << "timing." << key << "_s: " << format_number(value) << "\n";
  for (const auto& [file, hash] : m.checksums) out << "checksum." << file << ": " << hash << "\n";
  for (const auto& note : m.notes) out << "note: " << note << "\n";
  for (const auto& artifact : m.artifacts) out << "artifact: " << artifact << "\n";
  if (!out) throw IoError("write failed for " + path);
}

namespace detail {

inline std::vector<std::string> echo_config(const ScenarioConfig& cfg) {
  std::vector<std::string> out;
  out.push_back("chain.n_qubits: " + std::to_string(cfg.chain.n_qubits));
  out.push_back("chain.h: " + format_number(cfg.chain.h));
  out.push_back("chain.epsilon: " + format_number(cfg.chain.epsilon));
  out.push_back("chain.g: " + format_number(cfg.chain.g));
  out.push_back("chain.mass: " + format_number(cfg.chain.mass));
  out.push_back("chain.beta: " + format_number(cfg.chain.beta));
  out.push_back("chain.sigma_p: " + format_number(cfg.chain.sigma_p));
  out.push_back("chain.gamma: " + format_number(cfg.chain.gamma));
  out.push_back("run.variant: " + variant_name(cfg.variant));
  out.push_back("run.initial_state: " + cfg.initial_state);
  out.push_back("time_grid.kind: " + cfg.time_grid.kind);
  out.push_back("time_grid.t_min: " + format_number(cfg.time_grid.t_min));
  out.push_back("time_grid.t_max: " + format_number(cfg.time_grid.t_max));
  out.push_back("time_grid.points: " + std::to_string(cfg.time_grid.points));
  out.push_back("quadrature.panels: " + std::to_string(cfg.quadrature.panels));
  out.push_back("quadrature.nodes: " + std::to_string(cfg.quadrature.nodes));
  out.push_back("quadrature.W: " + format_number(cfg.quadrature.W));
  out.push_back("quadrature.tol_quad: " + format_number(cfg.quadrature.tol_quad));
  if (cfg.sweep) {
    std::string vals;
    for (double v : cfg.sweep->values) vals += (vals.empty() ? "" : ",") + format_number(v);
    out.push_back("sweep.parameter: " + cfg.sweep->parameter);
    out.push_back("sweep.values: " + vals);
  }
  return out;
}

inline DensityMatrix initial_state(const ScenarioConfig& cfg, const Spectrum& spectrum) {
  const int d = spectrum.dim();
  DensityMatrix rho;
  rho.basis = BasisTag::Eigenbasis;
  if (cfg.initial_state == "ground") {
    rho.data = Matrix::Zero(d, d);
    rho.data(0, 0) = 1.0;
    return rho;
  }
  if (cfg.initial_state == "gibbs") return gibbs_state(spectrum, cfg.chain.beta);
  const bool bits = cfg.initial_state.size() == static_cast<std::size_t>(cfg.chain.n_qubits) &&
                    cfg.initial_state.find_first_not_of("01") == std::string::npos;
  if (bits) {
    int b = 0;
    for (char c : cfg.initial_state) b = (b << 1) | (c - '0');
    Matrix local = Matrix::Zero(d, d);
    local(b, b) = 1.0;
    rho.data = to_eigenbasis(local, spectrum);
    return rho;
  }
  // otherwise a file of "j k re im" rows in the eigenbasis
  std::ifstream in(cfg.initial_state);
  if (!in) throw ValidationError("initial_state '" + cfg.initial_state +
                                 "' is neither ground, gibbs, a bit string, nor a readable file");
  rho.data = Matrix::Zero(d, d);
  int j, k;
  double re, im;
  while (in >> j >> k >> re >> im) {
    if (j < 0 || j >= d || k < 0 || k >= d)
      throw ValidationError("initial state file indices out of range");
    rho.data(j, k) = cxd(re, im);
  }
  rho.check(1e-8);
  return rho;
}

struct ObservableColumns {
  bool populations = false;
  bool band_ratio = false;
  bool beta_eff = false;
  std::vector<std::pair<int, int>> coherences;
};

inline ObservableColumns observable_columns(const ScenarioConfig& cfg) {
  ObservableColumns cols;
  for (const auto& name : cfg.outputs.observables) {
    if (name == "populations") cols.populations = true;
    else if (name == "band_ratio") cols.band_ratio = true;
    else if (name == "beta_eff") cols.beta_eff = true;
    else if (name.rfind("coherence_", 0) == 0 && name.size() == 12)
      cols.coherences.emplace_back(name[10] - '0', name[11] - '0');
    else
      throw ValidationError("unknown observable '" + name + "'");
  }
  return cols;
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                                 const Spectrum& spectrum, const ObservableColumns& cols,
                                 const std::vector<std::string>& preamble) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "# chainbath trajectory, format_version 1\n";
  for (const auto& line : preamble) out << "# " << line << "\n";
  const int d = spectrum.dim();
  out << "t";
  if (cols.populations)
    for (int j = 0; j < d; ++j) out << ",rho_" << j << j;
  for (auto [a, b] : cols.coherences) out << ",re_rho_" << a << b << ",im_rho_" << a << b;
  if (cols.band_ratio) out << ",rho123_over_rho00";
  if (cols.beta_eff) out << ",beta_eff";
  out << "\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const Matrix& rho = traj.states[i];
    auto rec = observables(rho, spectrum);
    out << format_number(traj.times[i]);
    if (cols.populations)
      for (int j = 0; j < d; ++j) out << ',' << format_number(rho(j, j).real());
    for (auto [a, b] : cols.coherences)
      out << ',' << format_number(rho(a, b).real()) << ',' << format_number(rho(a, b).imag());
    if (cols.band_ratio) out << ',' << format_number(rec.band1_over_ground);
    if (cols.beta_eff) out << ',' << format_number(rec.beta_eff);
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path);
}

inline void write_state_csv(const std::string& path, const Matrix& rho,
                            const Spectrum& spectrum,
                            const std::vector<std::string>& preamble) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "# chainbath state, format_version 1\n";
  for (const auto& line : preamble) out << "# " << line << "\n";
  auto rec = observables(rho, spectrum);
  out << "# rho123_over_rho00 = " << format_number(rec.band1_over_ground) << "\n";
  out << "# beta_eff = " << format_number(rec.beta_eff) << "\n";
  out << "j,k,re,im\n";
  for (int j = 0; j < rho.rows(); ++j)
    for (int k = 0; k < rho.cols(); ++k)
      out << j << ',' << k << ',' << format_number(rho(j, k).real()) << ','
          << format_number(rho(j, k).imag()) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

// Minimal static SVG line chart with a log10 time axis.
inline void write_svg_lines(const std::string& path, const std::string& title,
                            const std::vector<double>& t,
                            const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  const int width = 860, height = 520, mleft = 70, mright = 200, mtop = 40, mbot = 50;
  double ymin = 1e300, ymax = -1e300;
  for (const auto& [name, ys] : series)
    for (double y : ys)
      if (std::isfinite(y)) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
  if (!(ymax > ymin)) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double xmin = std::log10(t.front()), xmax = std::log10(t.back());
  const auto px = [&](double x) {
    return mleft + (std::log10(x) - xmin) / (xmax - xmin) * (width - mleft - mright);
  };
  const auto py = [&](double y) {
    return height - mbot - (y - ymin) / (ymax - ymin) * (height - mtop - mbot);
  };
  const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << width / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";
  out << "<line x1='" << mleft << "' y1='" << height - mbot << "' x2='" << width - mright
      << "' y2='" << height - mbot << "' stroke='black'/>\n";
  out << "<line x1='" << mleft << "' y1='" << mtop << "' x2='" << mleft << "' y2='"
      << height - mbot << "' stroke='black'/>\n";
  for (int e = static_cast<int>(std::ceil(xmin)); e <= static_cast<int>(std::floor(xmax)); ++e) {
    const double x = px(std::pow(10.0, e));
    out << "<line x1='" << x << "' y1='" << height - mbot << "' x2='" << x << "' y2='"
        << height - mbot + 5 << "' stroke='black'/>\n";
    out << "<text x='" << x << "' y='" << height - mbot + 20
        << "' text-anchor='middle' font-size='11'>1e" << e << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double y = ymin + (ymax - ymin) * i / 4.0;
    out << "<text x='" << mleft - 8 << "' y='" << py(y) + 4
        << "' text-anchor='end' font-size='11'>" << format_number(y).substr(0, 9)
        << "</text>\n";
  }
  int idx = 0;
  for (const auto& [name, ys] : series) {
    out << "<polyline fill='none' stroke='" << colors[idx % 8] << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < t.size() && i < ys.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      out << px(t[i]) << ',' << py(ys[i]) << ' ';
    }
    out << "'/>\n";
    out << "<text x='" << width - mright + 10 << "' y='" << mtop + 16 * idx + 10
        << "' font-size='12' fill='" << colors[idx % 8] << "'>" << name << "</text>\n";
    ++idx;
  }
  out << "</svg>\n";
}

}  // namespace detail

// Runs one pipeline: spectrum -> tensor -> generator -> trajectory ->
// observables, persisting the tensor, trajectory, steady state,
// classification report and manifest into the output directory.
inline RunManifest run_scenario(const ScenarioConfig& cfg, int threads = 1) {
  namespace fs = std::filesystem;
  cfg.validate();
  const fs::path dir(cfg.outputs.directory);
  fs::create_directories(dir);

  RunManifest manifest;
  manifest.config_echo = detail::echo_config(cfg);
  const auto clock = [] { return std::chrono::steady_clock::now(); };
  const auto seconds = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };

  try {
    auto spectrum = diagonalize(cfg.chain);
    if (spectrum.degenerate) manifest.notes.push_back("spectrum has degenerate levels");

    const auto t0 = clock();
    auto tensor = assemble_tensor(cfg.chain, spectrum, cfg.variant, cfg.quadrature,
                                  KernelModel::Effusion, threads);
    const auto t1 = clock();
    manifest.timings_s["tensor_assembly"] = seconds(t0, t1);
    manifest.residuals["tp_defect"] = tensor.quad.tp_defect;
    manifest.residuals["choi_min_eigenvalue"] = tensor.quad.choi_min;
    manifest.residuals["detailed_balance"] =
        check_detailed_balance(tensor, spectrum, cfg.chain.beta);
    if (cfg.variant == Variant::Local)
      manifest.residuals["sum_rule"] = check_sum_rule(tensor, spectrum, cfg.chain.beta);
    if (cfg.chain.g == 0.0) manifest.notes.push_back("identity tensor (g = 0)");

    const std::string tensor_file = (dir / "tensor.txt").string();
    save_tensor(tensor_file, tensor);
    manifest.artifacts.push_back("tensor.txt");

    Matrix h = spectrum.energies.cast<cxd>().asDiagonal();
    auto liouvillian = poisson_generator(h, tensor, cfg.chain.gamma);
    auto rho0 = detail::initial_state(cfg, spectrum);

    const auto t2 = clock();
    Trajectory traj;
    try {
      traj = evolve(liouvillian, rho0, cfg.time_grid.grid(), EvolveMethod::SpectralExp);
    } catch (const IllConditionedSpectral&) {
      manifest.notes.push_back("spectral propagation ill-conditioned, used RK4");
      traj = evolve(liouvillian, rho0, cfg.time_grid.grid(), EvolveMethod::RK4);
    }
    manifest.timings_s["evolve"] = seconds(t2, clock());

    const auto cols = detail::observable_columns(cfg);
    detail::write_trajectory_csv((dir / "trajectory.csv").string(), traj, spectrum, cols,
                                 {"variant " + variant_name(tensor.variant)});
    manifest.artifacts.push_back("trajectory.csv");

    try {
      auto steady = steady_state(liouvillian);
      detail::write_state_csv((dir / "steady.csv").string(), steady.data, spectrum,
                              {"steady state, variant " + variant_name(tensor.variant)});
      manifest.artifacts.push_back("steady.csv");
    } catch (const DegenerateSteadyState& e) {
      manifest.notes.push_back(std::string("steady state skipped: ") + e.what());
    }

    const auto t3 = clock();
    auto report = classify_tensor(tensor, spectrum, cfg.chain);
    manifest.timings_s["classification"] = seconds(t3, clock());
    std::ofstream rep_out(dir / "classify.txt");
    rep_out << to_text(report);
    rep_out.close();
    manifest.artifacts.push_back("classify.txt");

    if (cfg.outputs.emit_plots) {
      std::vector<std::pair<std::string, std::vector<double>>> series;
      const int d = spectrum.dim();
      for (int j = 0; j < d; ++j) {
        std::vector<double> ys;
        for (const auto& s : traj.states) ys.push_back(s(j, j).real());
        series.emplace_back("rho_" + std::to_string(j) + std::to_string(j), std::move(ys));
      }
      detail::write_svg_lines((dir / "populations.svg").string(), "eigenstate populations",
                              traj.times, series);
      manifest.artifacts.push_back("populations.svg");
    }

    manifest.checksums["tensor.txt"] = [&] {
      char buf[20];
      std::snprintf(buf, sizeof buf, "%016llx",
                    static_cast<unsigned long long>(fnv1a_file(tensor_file)));
      return std::string(buf);
    }();
  } catch (...) {
    manifest.status = "failed";
    write_manifest((dir / "manifest.txt").string(), manifest);
    throw;
  }

  manifest.artifacts.push_back("manifest.txt");
  write_manifest((dir / "manifest.txt").string(), manifest);
  return manifest;
}

// Runs the sweep axis of the config: one subdirectory per value plus a
// combined band-ratio dataset across values.
inline RunManifest run_sweep(const ScenarioConfig& cfg, int threads = 1) {
  namespace fs = std::filesystem;
  cfg.validate();
  if (!cfg.sweep) throw ValidationError("config has no [sweep] section");
  const fs::path dir(cfg.outputs.directory);
  fs::create_directories(dir);

  const auto& sw = *cfg.sweep;
  std::vector<ScenarioConfig> points(sw.values.size(), cfg);
  for (std::size_t i = 0; i < sw.values.size(); ++i) {
    auto& point = points[i];
    point.sweep.reset();
    if (sw.parameter == "epsilon") point.chain.epsilon = sw.values[i];
    else if (sw.parameter == "sigma_p") point.chain.sigma_p = sw.values[i];
    else point.chain.gamma = sw.values[i];
    point.outputs.directory =
        (dir / (sw.parameter + "_" + format_label(sw.values[i]))).string();
  }

  std::vector<std::string> errors(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    try {
      run_scenario(points[i], 1);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw ValidationError("sweep point failed: " + e);

  // combined ratio dataset
  RunManifest manifest;
  manifest.config_echo = detail::echo_config(cfg);
  std::ofstream out(dir / "ratio_sweep.csv");
  out << "# chainbath sweep ratio dataset, format_version 1\n";
  out << "# parameter " << sw.parameter << "\n";
  ChainSpec reference = cfg.chain;
  out << "# reference_local_ratio " << format_number(std::exp(-reference.beta * reference.h))
      << "\n";
  {
    ChainSpec decoupled = reference;
    decoupled.epsilon = 0.0;
    auto sp0 = diagonalize(decoupled);
    auto rec = observables(gibbs_state(sp0, reference.beta).data, sp0);
    out << "# reference_global_ratio " << format_number(rec.band1_over_ground) << "\n";
  }
  out << "t";
  for (double v : sw.values) out << ",ratio_" << format_label(v);
  out << "\n";
  std::vector<std::vector<double>> ratios(points.size());
  std::vector<double> times = cfg.time_grid.grid();
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::ifstream traj(fs::path(points[i].outputs.directory) / "trajectory.csv");
    std::string line;
    std::vector<std::string> header;
    int ratio_col = -1;
    while (std::getline(traj, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (ratio_col < 0) {
        std::istringstream hs(line);
        std::string name;
        int col = 0;
        while (std::getline(hs, name, ',')) {
          if (name == "rho123_over_rho00") ratio_col = col;
          ++col;
        }
        if (ratio_col < 0) throw ValidationError("sweep needs the band_ratio observable");
        continue;
      }
      std::istringstream ls(line);
      std::string cell;
      int col = 0;
      while (std::getline(ls, cell, ',')) {
        if (col == ratio_col) ratios[i].push_back(std::stod(cell));
        ++col;
      }
    }
  }
  for (std::size_t r = 0; r < times.size(); ++r) {
    out << format_number(times[r]);
    for (std::size_t i = 0; i < points.size(); ++i)
      out << ',' << format_number(r < ratios[i].size() ? ratios[i][r] : 0.0);
    out << "\n";
  }
  out.close();
  manifest.artifacts.push_back("ratio_sweep.csv");
  if (cfg.outputs.emit_plots) {
    std::vector<std::pair<std::string, std::vector<double>>> series;
    for (std::size_t i = 0; i < points.size(); ++i)
      series.emplace_back(sw.parameter + "=" + format_label(sw.values[i]), ratios[i]);
    detail::write_svg_lines((dir / "ratio_sweep.svg").string(), "first band over ground",
                            times, series);
    manifest.artifacts.push_back("ratio_sweep.svg");
  }
  manifest.artifacts.push_back("manifest.txt");
  write_manifest((dir / "manifest.txt").string(), manifest);
  return manifest;
}

// Reproduces the three reference figure datasets; base overrides carry over
// everything except the parameters each figure pins.
inline RunManifest reproduce_figure(const std::string& id, ScenarioConfig base,
                                    int threads = 1) {
  namespace fs = std::filesystem;
  const fs::path dir(base.outputs.directory);
  fs::create_directories(dir);
  base.sweep.reset();
  base.initial_state = "ground";

  RunManifest manifest;
  const auto track = [&](const std::string& name) { manifest.artifacts.push_back(name); };

  if (id == "fig2") {
    base.variant = Variant::Exact;
    base.time_grid = {"log", 1e-1, 1e7, 161};
    for (auto [eps, tag] : {std::pair{0.1, "fig2b"}, {5e-5, "fig2c"}}) {
      ScenarioConfig cfg = base;
      cfg.chain.epsilon = eps;
      cfg.outputs.directory = (dir / tag).string();
      run_scenario(cfg, threads);
      track(std::string(tag) + "/trajectory.csv");
    }
    ScenarioConfig sweep_cfg = base;
    sweep_cfg.outputs.directory = (dir / "fig2d").string();
    sweep_cfg.sweep = SweepConfig{"epsilon", {1e-1, 1e-2, 1e-3, 1e-4, 5e-5}};
    run_sweep(sweep_cfg, threads);
    track("fig2d/ratio_sweep.csv");
  } else if (id == "fig3") {
    base.time_grid = {"log", 1e-1, 1e6, 121};
    for (double eps : {0.1, 3e-3}) {
      std::vector<std::pair<std::string, std::vector<double>>> beta_series, coh_series;
      std::vector<double> times = base.time_grid.grid();
      for (Variant v : {Variant::Exact, Variant::Local, Variant::Narrow}) {
        ScenarioConfig cfg = base;
        cfg.chain.epsilon = eps;
        cfg.variant = v;
        cfg.outputs.directory =
            (dir / ("fig3_eps" + format_label(eps) + "_" + variant_name(v))).string();
        run_scenario(cfg, threads);
        // pull the columns back out of the per-variant trajectory
        std::ifstream traj(fs::path(cfg.outputs.directory) / "trajectory.csv");
        std::string line;
        int col_beta = -1, col_re = -1, col_im = -1, ncols = 0;
        std::vector<double> betas, cohs;
        while (std::getline(traj, line)) {
          if (line.empty() || line[0] == '#') continue;
          std::istringstream ls(line);
          std::string cell;
          if (col_beta < 0) {
            int c = 0;
            while (std::getline(ls, cell, ',')) {
              if (cell == "beta_eff") col_beta = c;
              if (cell == "re_rho_23") col_re = c;
              if (cell == "im_rho_23") col_im = c;
              ++c;
            }
            ncols = c;
            continue;
          }
          std::vector<double> row;
          while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
          if (static_cast<int>(row.size()) == ncols) {
            betas.push_back(row[col_beta]);
            cohs.push_back(std::hypot(row[col_re], row[col_im]));
          }
        }
        beta_series.emplace_back(variant_name(v), std::move(betas));
        coh_series.emplace_back(variant_name(v), std::move(cohs));
      }
      const std::string panel = (dir / ("fig3_eps" + format_label(eps) + ".csv")).string();
      std::ofstream out(panel);
      out << "# chainbath inter-band temperature panel, format_version 1\n";
      out << "# epsilon " << format_number(eps) << "\n";
      out << "# reservoir_beta " << format_number(base.chain.beta) << "\n";
      out << "t";
      for (const auto& [name, ignored] : beta_series)
        out << ",beta_eff_" << name << ",abs_rho23_" << name;
      out << "\n";
      for (std::size_t i = 0; i < times.size(); ++i) {
        out << format_number(times[i]);
        for (std::size_t s = 0; s < beta_series.size(); ++s)
          out << ',' << format_number(beta_series[s].second[i]) << ','
              << format_number(coh_series[s].second[i]);
        out << "\n";
      }
      track("fig3_eps" + format_label(eps) + ".csv");
      if (base.outputs.emit_plots) {
        detail::write_svg_lines(
            (dir / ("fig3_eps" + format_label(eps) + ".svg")).string(),
            "inter-band temperature, eps = " + format_label(eps), times, beta_series);
        track("fig3_eps" + format_label(eps) + ".svg");
      }
    }
  } else if (id == "fig4") {
    base.time_grid = {"log", 1e-1, 1e6, 121};
    base.chain.epsilon = 0.1;
    for (Variant v : {Variant::Exact, Variant::Local}) {
      ScenarioConfig cfg = base;
      cfg.variant = v;
      cfg.outputs.directory = (dir / ("fig4_" + variant_name(v))).string();
      run_scenario(cfg, threads);
      track("fig4_" + variant_name(v) + "/trajectory.csv");
    }
  } else {
    throw UnknownFigure(id);
  }

  manifest.config_echo = detail::echo_config(base);
  manifest.notes.push_back("figure " + id);
  manifest.artifacts.push_back("manifest.txt");
  write_manifest((dir / ("manifest_" + id + ".txt")).string(), manifest);
  return manifest;
}

}  // namespace chainbath
