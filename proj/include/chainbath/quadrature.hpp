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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "chainbath/common.hpp"

namespace chainbath {

struct QuadratureConfig {
  int panels = 8;            // base panel budget, distributed over sub-intervals
  int nodes = 32;            // Gauss-Legendre nodes per panel
  double W = 40.0;           // momentum cutoff p_max = sqrt(2 m W / beta)
  double tol_quad = 1e-7;    // node-doubling convergence tolerance
  bool check_convergence = true;
  bool trace_projection = false;  // explicit TP repair, off by default
};

// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1], by Newton
// iteration on the Legendre recurrence.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2 * j + 1) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

// A fixed momentum grid: sum_i weight[i] * f(node[i]) approximates the
// integral of f over [lo, hi].
struct MomentumGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  double lo = 0.0, hi = 0.0;
};

// Builds a composite grid over [lo, hi] split at the given breakpoints.  Each
// sub-interval is mapped by p = a + (b-a) sin^2(theta), which turns the
// sqrt(p - a) and sqrt(b - p) channel-threshold kinks into analytic functions
// of theta, restoring spectral convergence of the panels.
inline MomentumGrid build_momentum_grid(double lo, double hi,
                                        std::vector<double> breakpoints,
                                        int total_panels, int nodes_per_panel) {
  MomentumGrid grid;
  grid.lo = lo;
  grid.hi = hi;
  if (!(hi > lo)) return grid;

  breakpoints.push_back(lo);
  breakpoints.push_back(hi);
  std::sort(breakpoints.begin(), breakpoints.end());
  std::vector<double> edges;
  const double merge_tol = 1e-9 * (hi - lo);
  for (double b : breakpoints) {
    if (b < lo - merge_tol || b > hi + merge_tol) continue;
    b = std::clamp(b, lo, hi);
    if (edges.empty() || b - edges.back() > merge_tol) edges.push_back(b);
  }
  if (edges.size() < 2) edges = {lo, hi};

  const int n_intervals = static_cast<int>(edges.size()) - 1;
  std::vector<int> panels(n_intervals, 1);
  int budget = std::max(total_panels, n_intervals) - n_intervals;
  // Distribute the remaining budget proportionally to interval length.
  while (budget > 0) {
    int best = 0;
    double best_len = -1.0;
    for (int i = 0; i < n_intervals; ++i) {
      const double len = (edges[i + 1] - edges[i]) / panels[i];
      if (len > best_len) {
        best_len = len;
        best = i;
      }
    }
    ++panels[best];
    --budget;
  }

  std::vector<double> gx, gw;
  gauss_legendre(nodes_per_panel, gx, gw);
  constexpr double half_pi = std::numbers::pi / 2.0;
  for (int i = 0; i < n_intervals; ++i) {
    const double a = edges[i], b = edges[i + 1];
    const double len = b - a;
    for (int pnl = 0; pnl < panels[i]; ++pnl) {
      const double t0 = half_pi * pnl / panels[i];
      const double t1 = half_pi * (pnl + 1) / panels[i];
      for (int q = 0; q < nodes_per_panel; ++q) {
        const double theta = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * gx[q];
        const double s = std::sin(theta);
        grid.nodes.push_back(a + len * s * s);
        grid.weights.push_back(gw[q] * 0.5 * (t1 - t0) * len * std::sin(2.0 * theta));
      }
    }
  }
  return grid;
}

}  // namespace chainbath
