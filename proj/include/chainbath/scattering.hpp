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

#include <cmath>
#include <vector>

#include "chainbath/chain.hpp"
#include "chainbath/common.hpp"

namespace chainbath {

// One-collision scattering matrices of the delta barrier g*sigma_x on qubit 1
// at total energy E.  Channel j is open iff E > energies[j]; rows and columns
// of closed channels are zeroed in both matrices, and on the open block
//   s_minus = s_plus - I,
//   s_plus^dag s_plus + s_minus^dag s_minus = I   (flux unitarity),
//   s_{j'j} = s_{jj'}                             (micro-reversibility).
struct SMatrixPair {
  double energy = 0.0;
  Matrix transmitted;  // s^(+)
  Matrix reflected;    // s^(-)
  std::vector<bool> open_mask;

  int open_count() const {
    int n = 0;
    for (bool b : open_mask) n += b;
    return n;
  }
};

// Principal branch: sqrt(2m(E - e)) for open channels, i*sqrt(2m(e - E)) for
// evanescent ones.  The evanescent continuation is what reproduces the
// sub-threshold single-qubit closed form.
inline cxd channel_wavenumber(double energy, double level, double mass) {
  const double x = 2.0 * mass * (energy - level);
  return x >= 0 ? cxd(std::sqrt(x), 0.0) : cxd(0.0, std::sqrt(-x));
}

inline SMatrixPair smatrix_general(double energy, const Spectrum& spectrum,
                                   const ChainSpec& spec, const Matrix& x_eig) {
  const int d = spectrum.dim();
  const double emin = spectrum.energies.minCoeff();
  if (!(energy > emin)) throw NoOpenChannel("E = " + std::to_string(energy));
  for (int j = 0; j < d; ++j)
    if (std::abs(energy - spectrum.energies[j]) < 1e-12)
      throw SingularKMatrix("E at channel threshold " + std::to_string(j));

  Vector k(d), sqrt_k(d);
  for (int j = 0; j < d; ++j) {
    k[j] = channel_wavenumber(energy, spectrum.energies[j], spec.mass);
    sqrt_k[j] = std::sqrt(k[j]);
  }

  // s^(+) = K^{1/2} (K + i m g X)^{-1} K^{1/2}, with X = sigma_x on qubit 1 in
  // the eigenbasis.  Equivalent to the usual K^{-1} form but stays finite near
  // thresholds.
  Matrix b = kI * spec.mass * spec.g * x_eig;
  b.diagonal() += k;

  Eigen::PartialPivLU<Matrix> lu(b);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-12))
    throw LinearSolveFailure("channel matrix condition ~ " + std::to_string(1.0 / rcond));
  Matrix inv = lu.solve(Matrix::Identity(d, d));

  SMatrixPair out;
  out.energy = energy;
  out.open_mask.resize(d);
  for (int j = 0; j < d; ++j) out.open_mask[j] = energy > spectrum.energies[j];
  out.transmitted = sqrt_k.asDiagonal() * inv * sqrt_k.asDiagonal();
  out.reflected = out.transmitted - Matrix::Identity(d, d);
  for (int j = 0; j < d; ++j) {
    if (out.open_mask[j]) continue;
    out.transmitted.row(j).setZero();
    out.transmitted.col(j).setZero();
    out.reflected.row(j).setZero();
    out.reflected.col(j).setZero();
  }
  return out;
}

inline SMatrixPair smatrix_general(double energy, const Spectrum& spectrum,
                                   const ChainSpec& spec) {
  return smatrix_general(energy, spectrum, spec,
                         to_eigenbasis(embed_single(pauli::sx(), 1, spec.n_qubits), spectrum));
}

// Reusable evaluator holding the coupling operator in the eigenbasis; avoids
// rebuilding it for the millions of energies visited during tensor assembly.
class SMatrixEvaluator {
 public:
  SMatrixEvaluator(const Spectrum& spectrum, const ChainSpec& spec)
      : spectrum_(&spectrum),
        spec_(&spec),
        x_eig_(to_eigenbasis(embed_single(pauli::sx(), 1, spec.n_qubits), spectrum)) {}

  SMatrixPair operator()(double energy) const {
    return smatrix_general(energy, *spectrum_, *spec_, x_eig_);
  }

 private:
  const Spectrum* spectrum_;
  const ChainSpec* spec_;
  Matrix x_eig_;
};

// Explicit 2x2 closed form for a single qubit, channels ordered (ground,
// excited).  Above threshold c is real; below it c^2 is continued to
// -i g^2 m / (2 sqrt(E(h-E))) and only the elastic ground channel survives.
inline SMatrixPair smatrix_single_qubit(double energy, const ChainSpec& spec) {
  if (!(energy > 0)) throw ThresholdEnergy("E must be > 0");
  if (std::abs(energy - spec.h) < 1e-12) throw ThresholdEnergy("E at the excitation threshold");

  SMatrixPair out;
  out.energy = energy;
  out.transmitted = Matrix::Zero(2, 2);
  out.reflected = Matrix::Zero(2, 2);
  out.open_mask = {true, energy > spec.h};

  if (energy > spec.h) {
    const double c = spec.g * std::sqrt(spec.mass / 2.0) /
                     std::pow(energy * (energy - spec.h), 0.25);
    const cxd det = 1.0 + c * c;
    out.transmitted << 1.0 / det, -kI * c / det, -kI * c / det, 1.0 / det;
    out.reflected = out.transmitted - Matrix::Identity(2, 2);
  } else {
    const cxd c2 = -kI * spec.g * spec.g * spec.mass /
                   (2.0 * std::sqrt(energy * (spec.h - energy)));
    out.transmitted(0, 0) = 1.0 / (1.0 + c2);
    out.reflected(0, 0) = out.transmitted(0, 0) - 1.0;
  }
  return out;
}

// Scalar scattering amplitudes of the decoupled-chain limit, in which the
// collision only sees the first qubit and the incident momentum p fixes
// everything:
//   c_pm(p) = g m / sqrt(p sqrt(p^2 pm 2mh)).
// c_plus governs the channel pair of an initially excited qubit (elastic +
// emission), c_minus the pair of a ground qubit (elastic + absorption); below
// p = sqrt(2mh) the absorption channel closes and c_minus^2 turns imaginary.
struct LocalAmplitudes {
  double momentum = 0.0;
  double energy = 0.0;  // E_p + n h, bookkeeping only
  // transmitted set (alpha = +)
  cxd elastic_excited_t;  // a_1
  cxd elastic_ground_t;   // a_0
  cxd flip_emission_t;    // qubit 1 -> 0
  cxd flip_absorption_t;  // qubit 0 -> 1, zero below threshold
  // reflected set (alpha = -), s^(-) = s^(+) - I
  cxd elastic_excited_r;
  cxd elastic_ground_r;
  cxd flip_emission_r;
  cxd flip_absorption_r;
};

inline LocalAmplitudes smatrix_local_limit(double p, int n_excitations,
                                           const ChainSpec& spec) {
  if (!(p > 0)) throw InvalidMomentum("p must be > 0");
  const double a = spec.g * spec.mass;       // c^2 = a^2 / s
  const double a2 = a * a;
  const double two_mh = 2.0 * spec.mass * spec.h;

  const double s_plus = p * std::sqrt(p * p + two_mh);
  const double w = p * p - two_mh;
  const cxd s_minus = w >= 0 ? cxd(p * std::sqrt(w), 0) : cxd(0, p * std::sqrt(-w));

  LocalAmplitudes out;
  out.momentum = p;
  out.energy = p * p / (2.0 * spec.mass) + n_excitations * spec.h;

  out.elastic_excited_t = s_plus / (s_plus + a2);
  out.elastic_ground_t = s_minus / (s_minus + a2);
  out.flip_emission_t = -kI * a * std::sqrt(s_plus) / (s_plus + a2);
  out.flip_absorption_t = w > 0 ? -kI * a * std::sqrt(s_minus) / (s_minus + a2) : cxd(0, 0);

  out.elastic_excited_r = out.elastic_excited_t - 1.0;
  out.elastic_ground_r = out.elastic_ground_t - 1.0;
  out.flip_emission_r = out.flip_emission_t;
  out.flip_absorption_r = out.flip_absorption_t;
  return out;
}

}  // namespace chainbath
