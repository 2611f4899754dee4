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

#include <bit>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chainbath/chain.hpp"
#include "chainbath/collision.hpp"
#include "chainbath/common.hpp"
#include "chainbath/dynamics.hpp"

namespace chainbath {

struct IncoherenceReport {
  bool is_io = false;
  bool is_sio = false;
  double column_residual = 0.0;  // second-largest column entry over the max
  double row_residual = 0.0;
  int witness_operator = -1;
};

// Incoherent operations map eigenstates to eigenstates: every column of every
// Kraus operator carries at most one significant entry; strictly incoherent
// operations additionally constrain the rows.
inline IncoherenceReport classify_incoherent(const KrausSet& kraus, double tol = 1e-8) {
  IncoherenceReport rep;
  for (std::size_t l = 0; l < kraus.operators.size(); ++l) {
    const Matrix& op = kraus.operators[l];
    const double scale = op.cwiseAbs().maxCoeff();
    if (scale == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      const Matrix view = pass == 0 ? op : Matrix(op.transpose());
      for (Eigen::Index c = 0; c < view.cols(); ++c) {
        double largest = 0, second = 0;
        for (Eigen::Index r = 0; r < view.rows(); ++r) {
          const double a = std::abs(view(r, c));
          if (a > largest) {
            second = largest;
            largest = a;
          } else if (a > second) {
            second = a;
          }
        }
        double& resid = pass == 0 ? rep.column_residual : rep.row_residual;
        if (second / scale > resid) {
          resid = second / scale;
          rep.witness_operator = static_cast<int>(l);
        }
      }
    }
  }
  rep.is_io = rep.column_residual <= tol;
  rep.is_sio = rep.is_io && rep.row_residual <= tol;
  return rep;
}

struct TioReport {
  bool is_tio = false;
  double residual = 0.0;  // largest entry violating the fixed-transfer rule
  int witness[4] = {-1, -1, -1, -1};
};

// Translationally invariant operations only connect index pairs with equal
// Bohr frequency transfer: S^{jk}_{j'k'} != 0 requires Delta_kj = Delta_k'j'.
inline TioReport classify_tio(const CollisionTensor& tensor, const Spectrum& spectrum,
                              double tol = 1e-8) {
  TioReport rep;
  const int d = tensor.d;
  const double scale = tensor.super.cwiseAbs().maxCoeff();
  const double delta_omega = 1e-8 * tensor.spec.h;
  for (int jp = 0; jp < d; ++jp)
    for (int kp = 0; kp < d; ++kp)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          const double mag = std::abs(tensor.at(jp, kp, j, k));
          if (mag <= tol * scale) continue;
          if (std::abs(spectrum.gap(j, k) - spectrum.gap(jp, kp)) <= delta_omega) continue;
          if (mag > rep.residual) {
            rep.residual = mag;
            rep.witness[0] = jp;
            rep.witness[1] = kp;
            rep.witness[2] = j;
            rep.witness[3] = k;
          }
        }
  rep.is_tio = rep.residual == 0.0;
  return rep;
}

struct GeneralizedLocalReport {
  bool is_generalized_local = false;
  bool is_strictly_local = false;
  double residual_nonlocal = 0.0;    // entries acting beyond the first qubit
  double residual_energy_only = 0.0; // entry spread inside an (s1', s1, n) group
  double residual_factorization = 0.0;  // diagonal-sector coupling consistency
  // lambda sampled on the (n_out, n_in) lattice, per Kraus operator
  std::vector<std::map<std::pair<int, int>, cxd>> lambda_tables;
};

// Generalized local operators act on the first qubit with a scalar weight
// that may depend only on the unperturbed energies of the two states.  The
// testable content in the local basis is:
//   (1) entries vanish unless qubits 2..N are untouched,
//   (2) surviving entries depend on the rest-configuration only through its
//       excitation count,
//   (3) in the diagonal sector the two first-qubit channels share one lambda
//       ladder: entry(1,1 at n) / entry(0,0 at n) is n-independent.
inline GeneralizedLocalReport classify_generalized_local(const KrausSet& kraus,
                                                         const Spectrum& spectrum,
                                                         double tol = 1e-8) {
  GeneralizedLocalReport rep;
  const int d = spectrum.dim();
  const int n = std::countr_zero(static_cast<unsigned>(d));
  const int msb = 1 << (n - 1);
  double strict_residual = 0.0;

  for (const Matrix& op_eig : kraus.operators) {
    Matrix op = to_local_basis(op_eig, spectrum);
    const double scale = op.cwiseAbs().maxCoeff();
    std::map<std::pair<int, int>, cxd> lambda;
    if (scale == 0.0) {
      rep.lambda_tables.push_back(lambda);
      continue;
    }

    // (1) zero pattern
    for (int bp = 0; bp < d; ++bp)
      for (int b = 0; b < d; ++b)
        if ((bp & (msb - 1)) != (b & (msb - 1)))
          rep.residual_nonlocal =
              std::max(rep.residual_nonlocal, std::abs(op(bp, b)) / scale);

    // (2) group constancy over rest-configurations with equal excitation count
    // group key: (s1', s1, rest excitations); value: mean entry
    std::map<std::tuple<int, int, int>, std::vector<cxd>> groups;
    for (int rest = 0; rest < msb; ++rest)
      for (int s1p = 0; s1p < 2; ++s1p)
        for (int s1 = 0; s1 < 2; ++s1)
          groups[{s1p, s1, excitation_count(rest)}].push_back(
              op(s1p * msb + rest, s1 * msb + rest));
    std::map<std::tuple<int, int, int>, cxd> mean;
    for (auto& [key, vals] : groups) {
      cxd m = 0;
      for (cxd v : vals) m += v;
      m /= double(vals.size());
      mean[key] = m;
      for (cxd v : vals)
        rep.residual_energy_only = std::max(rep.residual_energy_only, std::abs(v - m) / scale);
    }

    // (3) diagonal-sector coupling: entry(1,1)@r and entry(0,0)@(r+1) both
    // sample lambda(r+1, r+1)
    double best = 0;
    cxd ratio = 0;
    for (int r = 0; r + 1 < n; ++r) {
      const cxd x = mean[{1, 1, r}], y = mean[{0, 0, r + 1}];
      if (std::abs(x * y) / (scale * scale) > best) {
        best = std::abs(x * y) / (scale * scale);
        ratio = x / y;
      }
    }
    if (best > tol)
      for (int r = 0; r + 1 < n; ++r) {
        const cxd x = mean[{1, 1, r}], y = mean[{0, 0, r + 1}];
        if (std::abs(y) / scale > tol)
          rep.residual_factorization =
              std::max(rep.residual_factorization, std::abs(x - ratio * y) / scale);
      }

    // lambda table: anchor each sector at its first populated group
    const auto lambda_of = [&](int s1p, int s1) {
      cxd anchor = 0;
      for (int r = 0; r < n; ++r) {
        auto it = mean.find({s1p, s1, r});
        if (it != mean.end() && std::abs(it->second) / scale > tol) {
          anchor = it->second;
          break;
        }
      }
      if (anchor == cxd(0, 0)) return;
      for (int r = 0; r < n; ++r) {
        auto it = mean.find({s1p, s1, r});
        if (it == mean.end()) continue;
        lambda[{r + s1p, r + s1}] = it->second / anchor;
      }
    };
    lambda_of(0, 0);
    lambda_of(1, 1);
    lambda_of(1, 0);
    lambda_of(0, 1);
    for (const auto& [key, v] : lambda)
      strict_residual = std::max(strict_residual, std::abs(v - cxd(1, 0)));
    rep.lambda_tables.push_back(std::move(lambda));
  }

  rep.is_generalized_local = rep.residual_nonlocal <= tol &&
                             rep.residual_energy_only <= tol &&
                             rep.residual_factorization <= tol;
  rep.is_strictly_local = rep.is_generalized_local && strict_residual <= tol;
  return rep;
}

// Population transition rates Gamma_{j -> j'} = Gamma * Re S^{jj}_{j'j'},
// returned as rates(j', j).
inline RealMatrix transition_rates(const CollisionTensor& tensor, double gamma,
                                   double* max_imag = nullptr) {
  const int d = tensor.d;
  RealMatrix rates(d, d);
  double imag_worst = 0;
  for (int jp = 0; jp < d; ++jp)
    for (int j = 0; j < d; ++j) {
      const cxd v = tensor.at(jp, jp, j, j);
      imag_worst = std::max(imag_worst, std::abs(v.imag()));
      if (v.real() < -1e-10)
        throw NegativeRate("rate " + std::to_string(j) + "->" + std::to_string(jp) + " = " +
                           std::to_string(v.real()));
      rates(jp, j) = gamma * std::max(v.real(), 0.0);
    }
  if (max_imag) *max_imag = imag_worst;
  return rates;
}

// Trace distance between the mapped Gibbs state and itself; zero for maps
// with a thermal fixed point.
inline double gibbs_invariance(const CollisionTensor& tensor, const Spectrum& spectrum,
                               double beta) {
  DensityMatrix gibbs = gibbs_state(spectrum, beta);
  return trace_distance(tensor.apply(gibbs.data), gibbs.data);
}

struct ClassificationReport {
  IncoherenceReport incoherence;
  TioReport tio;
  GeneralizedLocalReport local;
  double gibbs_defect = 0.0;
  double rate_imag_worst = 0.0;
  std::string variant;
};

inline ClassificationReport classify_tensor(const CollisionTensor& tensor,
                                            const Spectrum& spectrum, const ChainSpec& spec,
                                            double tol = 1e-8) {
  ClassificationReport rep;
  rep.variant = variant_name(tensor.variant);
  KrausSet kraus = kraus_decomposition(tensor, 1e-10);
  rep.incoherence = classify_incoherent(kraus, tol);
  rep.tio = classify_tio(tensor, spectrum, tol);
  rep.local = classify_generalized_local(kraus, spectrum, tol);
  rep.gibbs_defect = gibbs_invariance(tensor, spectrum, spec.beta);
  transition_rates(tensor, spec.gamma, &rep.rate_imag_worst);
  return rep;
}

inline std::string to_text(const ClassificationReport& rep) {
  std::ostringstream out;
  out.precision(17);
  out << "format_version: 1\n";
  out << "variant: " << rep.variant << "\n";
  out << "is_IO: " << (rep.incoherence.is_io ? "true" : "false") << "\n";
  out << "is_SIO: " << (rep.incoherence.is_sio ? "true" : "false") << "\n";
  out << "residual_IO_columns: " << rep.incoherence.column_residual << "\n";
  out << "residual_SIO_rows: " << rep.incoherence.row_residual << "\n";
  out << "witness_operator: " << rep.incoherence.witness_operator << "\n";
  out << "is_TIO: " << (rep.tio.is_tio ? "true" : "false") << "\n";
  out << "residual_TIO: " << rep.tio.residual << "\n";
  out << "witness_TIO: (" << rep.tio.witness[0] << "," << rep.tio.witness[1] << ","
      << rep.tio.witness[2] << "," << rep.tio.witness[3] << ")\n";
  out << "is_generalized_local: " << (rep.local.is_generalized_local ? "true" : "false")
      << "\n";
  out << "is_strictly_local: " << (rep.local.is_strictly_local ? "true" : "false") << "\n";
  out << "residual_nonlocal: " << rep.local.residual_nonlocal << "\n";
  out << "residual_energy_only: " << rep.local.residual_energy_only << "\n";
  out << "residual_factorization: " << rep.local.residual_factorization << "\n";
  out << "gibbs_invariance_defect: " << rep.gibbs_defect << "\n";
  out << "rate_imag_worst: " << rep.rate_imag_worst << "\n";
  for (std::size_t l = 0; l < rep.local.lambda_tables.size(); ++l)
    for (const auto& [key, v] : rep.local.lambda_tables[l])
      out << "lambda[op" << l << "][" << key.first << "," << key.second << "]: " << v.real()
          << (v.imag() < 0 ? "" : "+") << v.imag() << "i\n";
  return out.str();
}

}  // namespace chainbath
