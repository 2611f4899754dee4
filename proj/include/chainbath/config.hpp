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

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "chainbath/chain.hpp"
#include "chainbath/collision.hpp"
#include "chainbath/common.hpp"
#include "chainbath/quadrature.hpp"

namespace chainbath {

struct TimeGridConfig {
  std::string kind = "log";  // log | linear
  double t_min = 0.1;
  double t_max = 1e6;
  int points = 200;

  std::vector<double> grid() const {
    std::vector<double> t(points);
    for (int i = 0; i < points; ++i) {
      const double f = points == 1 ? 0.0 : double(i) / (points - 1);
      t[i] = kind == "log" ? t_min * std::pow(t_max / t_min, f)
                           : t_min + (t_max - t_min) * f;
    }
    return t;
  }
};

struct SweepConfig {
  std::string parameter;  // epsilon | sigma_p | gamma
  std::vector<double> values;
};

struct OutputConfig {
  std::string directory = "out";
  bool emit_plots = false;
  std::vector<std::string> observables{"populations", "band_ratio", "beta_eff",
                                       "coherence_23"};
};

// Full description of one run; every physical parameter defaults to the
// reference values used throughout (N = 3, h = 4, eps = 0.1, g = 50,
// m = beta = 0.1, sigma_p = 0.5, Gamma = 1).
struct ScenarioConfig {
  ChainSpec chain;
  Variant variant = Variant::Exact;
  std::string initial_state = "ground";  // ground | gibbs | bit string | file path
  TimeGridConfig time_grid;
  QuadratureConfig quadrature;
  OutputConfig outputs;
  std::optional<SweepConfig> sweep;

  void validate() const {
    try {
      chain.validate();
    } catch (const InvalidSpec& e) {
      throw ValidationError(e.what());
    }
    if (!(time_grid.t_min < time_grid.t_max))
      throw ValidationError("time_grid requires t_min < t_max");
    if (time_grid.points < 2) throw ValidationError("time_grid requires points >= 2");
    if (time_grid.kind != "log" && time_grid.kind != "linear")
      throw ValidationError("time_grid kind must be log or linear");
    if (sweep) {
      if (sweep->values.empty()) throw ValidationError("sweep values must be nonempty");
      if (sweep->parameter != "epsilon" && sweep->parameter != "sigma_p" &&
          sweep->parameter != "gamma")
        throw ValidationError("sweep parameter must be epsilon, sigma_p or gamma");
    }
    if (quadrature.panels < 1 || quadrature.nodes < 2)
      throw ValidationError("quadrature requires panels >= 1 and nodes >= 2");
    if (!(quadrature.W > 0) || !(quadrature.tol_quad > 0))
      throw ValidationError("quadrature requires positive W and tol_quad");
  }
};

namespace detail {

inline double parse_number(const std::string& value, int line_no) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": expected a number, got '" +
                     value + "'");
  }
  while (used < value.size() && std::isspace(static_cast<unsigned char>(value[used]))) ++used;
  if (used != value.size())
    throw ParseError("line " + std::to_string(line_no) + ": trailing characters in '" +
                     value + "'");
  return out;
}

inline bool parse_bool(const std::string& value, int line_no) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ParseError("line " + std::to_string(line_no) + ": expected a boolean, got '" +
                   value + "'");
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

}  // namespace detail

// Strict parse of the sectioned key-value format; unknown sections or keys
// are errors, omitted ones keep their defaults.
inline ScenarioConfig parse_config(std::istream& in) {
  ScenarioConfig cfg;
  std::string line, section;
  int line_no = 0;
  bool sweep_seen = false;
  SweepConfig sweep;

  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    const auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    const auto b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("line " + std::to_string(line_no) + ": unterminated section");
      section = line.substr(1, line.size() - 2);
      if (section != "chain" && section != "run" && section != "time_grid" &&
          section != "quadrature" && section != "outputs" && section != "sweep")
        throw ParseError("line " + std::to_string(line_no) + ": unknown section [" +
                         section + "]");
      if (section == "sweep") sweep_seen = true;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(line_no) + ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto ka = key.find_last_not_of(" \t");
    key = key.substr(0, ka + 1);
    const auto va = value.find_first_not_of(" \t");
    value = va == std::string::npos ? "" : value.substr(va);

    if (section.empty())
      throw ParseError("line " + std::to_string(line_no) + ": key outside any section");

    if (section == "chain") {
      if (key == "n_qubits")
        cfg.chain.n_qubits = static_cast<int>(detail::parse_number(value, line_no));
      else if (key == "h") cfg.chain.h = detail::parse_number(value, line_no);
      else if (key == "epsilon") cfg.chain.epsilon = detail::parse_number(value, line_no);
      else if (key == "g") cfg.chain.g = detail::parse_number(value, line_no);
      else if (key == "mass") cfg.chain.mass = detail::parse_number(value, line_no);
      else if (key == "beta") cfg.chain.beta = detail::parse_number(value, line_no);
      else if (key == "sigma_p") cfg.chain.sigma_p = detail::parse_number(value, line_no);
      else if (key == "gamma") cfg.chain.gamma = detail::parse_number(value, line_no);
      else
        throw ParseError("line " + std::to_string(line_no) + ": unknown key '" + key +
                         "' in [chain]");
    } else if (section == "run") {
      if (key == "variant") cfg.variant = variant_from_name(value);
      else if (key == "initial_state") cfg.initial_state = value;
      else
        throw ParseError("line " + std::to_string(line_no) + ": unknown key '" + key +
                         "' in [run]");
    } else if (section == "time_grid") {
      if (key == "kind") cfg.time_grid.kind = value;
      else if (key == "t_min") cfg.time_grid.t_min = detail::parse_number(value, line_no);
      else if (key == "t_max") cfg.time_grid.t_max = detail::parse_number(value, line_no);
      else if (key == "points")
        cfg.time_grid.points = static_cast<int>(detail::parse_number(value, line_no));
      else
        throw ParseError("line " + std::to_string(line_no) + ": unknown key '" + key +
                         "' in [time_grid]");
    } else if (section == "quadrature") {
      if (key == "panels")
        cfg.quadrature.panels = static_cast<int>(detail::parse_number(value, line_no));
      else if (key == "nodes")
        cfg.quadrature.nodes = static_cast<int>(detail::parse_number(value, line_no));
      else if (key == "W") cfg.quadrature.W = detail::parse_number(value, line_no);
      else if (key == "tol_quad")
        cfg.quadrature.tol_quad = detail::parse_number(value, line_no);
      else if (key == "check_convergence")
        cfg.quadrature.check_convergence = detail::parse_bool(value, line_no);
      else if (key == "trace_projection")
        cfg.quadrature.trace_projection = detail::parse_bool(value, line_no);
      else
        throw ParseError("line " + std::to_string(line_no) + ": unknown key '" + key +
                         "' in [quadrature]");
    } else if (section == "outputs") {
      if (key == "directory") cfg.outputs.directory = value;
      else if (key == "emit_plots") cfg.outputs.emit_plots = detail::parse_bool(value, line_no);
      else if (key == "observables") cfg.outputs.observables = detail::split_list(value);
      else
        throw ParseError("line " + std::to_string(line_no) + ": unknown key '" + key +
                         "' in [outputs]");
    } else if (section == "sweep") {
      if (key == "parameter") sweep.parameter = value;
      else if (key == "values") {
        sweep.values.clear();
        for (const auto& item : detail::split_list(value))
          sweep.values.push_back(detail::parse_number(item, line_no));
      } else
        throw ParseError("line " + std::to_string(line_no) + ": unknown key '" + key +
                         "' in [sweep]");
    }
  }

  if (sweep_seen) cfg.sweep = sweep;
  cfg.validate();
  return cfg;
}

inline ScenarioConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  return parse_config(in);
}

}  // namespace chainbath
