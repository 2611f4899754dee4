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
#include <cstdint>
#include <numeric>
#include <vector>

#include "chainbath/common.hpp"

namespace chainbath {

// Physical parameters of the qubit chain and its collisional reservoir.
// Units are natural (hbar = 1); every quantity is a pure number.
struct ChainSpec {
  int n_qubits = 3;      // N
  double h = 4.0;        // qubit splitting
  double epsilon = 0.1;  // inter-qubit coupling
  double g = 50.0;       // delta-coupling strength to the incident particle
  double mass = 0.1;     // reservoir particle mass
  double beta = 0.1;     // inverse temperature of the reservoir
  double sigma_p = 0.5;  // momentum dispersion of the incident packets
  double gamma = 1.0;    // collision rate

  int dim() const { return 1 << n_qubits; }

  void validate() const {
    if (n_qubits < 1) throw InvalidSpec("n_qubits must be >= 1");
    if (!(h > 0)) throw InvalidSpec("h must be > 0");
    if (epsilon < 0) throw InvalidSpec("epsilon must be >= 0");
    if (!(mass > 0)) throw InvalidSpec("mass must be > 0");
    if (!(beta > 0)) throw InvalidSpec("beta must be > 0");
    if (!(sigma_p > 0)) throw InvalidSpec("sigma_p must be > 0");
    if (gamma < 0) throw InvalidSpec("gamma must be >= 0");
  }
};

// Local product basis: |s_1 s_2 ... s_N> with s_1 the most significant bit,
// so basis index b has qubit i in state (b >> (N-i)) & 1.
inline int qubit_bit(int basis_index, int qubit, int n_qubits) {
  return (basis_index >> (n_qubits - qubit)) & 1;
}

inline int excitation_count(int basis_index) {
  return static_cast<int>(std::popcount(static_cast<unsigned>(basis_index)));
}

struct HamiltonianTriple {
  Matrix h_loc;    // sum_i h (sigma_z + 1)/2, diagonal in the local basis
  Matrix h_int;    // XX hopping, ladder convention sigma_pm = sigma_x pm i sigma_y
  Matrix h_total;  // h_loc + epsilon * h_int
};

struct Spectrum {
  RealVector energies;              // ascending eigenvalues of h_total
  Matrix eigenvectors;              // columns = |j> in the local product basis
  std::vector<int> excitations;     // n_j per level
  std::vector<std::vector<int>> band_index;  // level indices grouped by n
  RealVector local_energies;        // n_j * h
  bool degenerate = false;          // some gap below 1e-12 * h

  int dim() const { return static_cast<int>(energies.size()); }
  double gap(int j, int k) const { return energies[k] - energies[j]; }
};

enum class BasisTag { Eigenbasis, LocalBasis };

struct DensityMatrix {
  Matrix data;
  BasisTag basis = BasisTag::Eigenbasis;

  void check(double pos_tol = 1e-10) const {
    if (hermiticity_defect(data) > 1e-12)
      throw ValidationError("density matrix not Hermitian");
    if (std::abs(data.trace().real() - 1.0) > 1e-12 || std::abs(data.trace().imag()) > 1e-12)
      throw ValidationError("density matrix trace != 1");
    if (min_eigenvalue(data) < -pos_tol)
      throw ValidationError("density matrix has a negative eigenvalue");
  }
};

// Single-qubit operators in the (ground, excited) index convention used by the
// local basis above.  The ladder operators carry the factor-2 normalization of
// sigma_pm = sigma_x pm i sigma_y.
namespace pauli {
inline Matrix sx() { return (Matrix(2, 2) << 0, 1, 1, 0).finished(); }
inline Matrix sz() { return (Matrix(2, 2) << -1, 0, 0, 1).finished(); }
inline Matrix splus() { return (Matrix(2, 2) << 0, 0, 2, 0).finished(); }
inline Matrix sminus() { return (Matrix(2, 2) << 0, 2, 0, 0).finished(); }
inline Matrix p0() { return (Matrix(2, 2) << 1, 0, 0, 0).finished(); }
inline Matrix p1() { return (Matrix(2, 2) << 0, 0, 0, 1).finished(); }
}  // namespace pauli

// Embeds a single-qubit operator acting on `qubit` (1-based) into the chain.
inline Matrix embed_single(const Matrix& op, int qubit, int n_qubits) {
  const int d = 1 << n_qubits;
  Matrix out = Matrix::Zero(d, d);
  const int shift = n_qubits - qubit;
  for (int b = 0; b < d; ++b) {
    const int s = (b >> shift) & 1;
    for (int sp = 0; sp < 2; ++sp) {
      const cxd amp = op(sp, s);
      if (amp == cxd(0, 0)) continue;
      const int bp = (b & ~(1 << shift)) | (sp << shift);
      out(bp, b) += amp;
    }
  }
  return out;
}

inline HamiltonianTriple build_chain_hamiltonian(const ChainSpec& spec) {
  spec.validate();
  const int n = spec.n_qubits;
  const int d = spec.dim();

  Matrix h_loc = Matrix::Zero(d, d);
  for (int b = 0; b < d; ++b) h_loc(b, b) = spec.h * excitation_count(b);

  Matrix h_int = Matrix::Zero(d, d);
  for (int i = 1; i < n; ++i) {
    Matrix hop = embed_single(pauli::splus(), i, n) * embed_single(pauli::sminus(), i + 1, n);
    h_int += hop + hop.adjoint();
  }

  return {h_loc, h_int, h_loc + spec.epsilon * h_int};
}

namespace detail {

// Rotates each column so its largest-magnitude component is real positive;
// eigen-solvers return arbitrary phases and downstream tensors must be
// reproducible bit-for-bit.
inline void fix_phases(Matrix& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const double a = std::abs(vectors(r, c));
      if (a > best) {
        best = a;
        imax = r;
      }
    }
    const cxd pivot = vectors(imax, c);
    if (std::abs(pivot) > 0) vectors.col(c) *= std::conj(pivot) / std::abs(pivot);
  }
}

}  // namespace detail

inline Spectrum diagonalize(const HamiltonianTriple& triple, const ChainSpec& spec) {
  const int d = spec.dim();
  if (hermiticity_defect(triple.h_total) > 1e-14 * std::max(1.0, triple.h_total.cwiseAbs().maxCoeff()))
    throw InvalidSpec("h_total is not Hermitian");

  Spectrum out;
  out.energies.resize(d);
  out.eigenvectors.resize(d, d);

  if (spec.epsilon == 0.0) {
    // Degenerate bands: serve the local product basis itself, ordered by
    // (excitation count, basis index), instead of an arbitrary rotation
    // inside the degenerate blocks.
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return excitation_count(a) != excitation_count(b)
                 ? excitation_count(a) < excitation_count(b)
                 : a < b;
    });
    out.eigenvectors = Matrix::Zero(d, d);
    for (int j = 0; j < d; ++j) {
      out.energies[j] = spec.h * excitation_count(order[j]);
      out.eigenvectors(order[j], j) = 1.0;
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(triple.h_total);
    if (es.info() != Eigen::Success) throw InvalidSpec("eigen-decomposition failed");
    out.energies = es.eigenvalues();
    out.eigenvectors = es.eigenvectors();
    detail::fix_phases(out.eigenvectors);
  }

  for (int j = 0; j + 1 < d; ++j)
    if (out.energies[j + 1] - out.energies[j] < 1e-12 * spec.h) out.degenerate = true;

  // Excitation labels from the total number operator.
  RealVector number_diag(d);
  for (int b = 0; b < d; ++b) number_diag[b] = excitation_count(b);
  out.excitations.resize(d);
  out.local_energies.resize(d);
  out.band_index.assign(spec.n_qubits + 1, {});
  for (int j = 0; j < d; ++j) {
    double expect = 0.0;
    for (int b = 0; b < d; ++b) expect += number_diag[b] * std::norm(out.eigenvectors(b, j));
    const int n = static_cast<int>(std::lround(expect));
    if (std::abs(expect - n) > 1e-6)
      throw NonIntegerExcitation("level " + std::to_string(j) + " has <n> = " + std::to_string(expect));
    out.excitations[j] = n;
    out.local_energies[j] = n * spec.h;
    out.band_index[n].push_back(j);
  }
  return out;
}

inline Spectrum diagonalize(const ChainSpec& spec) {
  return diagonalize(build_chain_hamiltonian(spec), spec);
}

// e^{-beta H} / Z, diagonal in the eigenbasis.
inline DensityMatrix gibbs_state(const Spectrum& spectrum, double beta) {
  if (!(beta > 0)) throw InvalidSpec("beta must be > 0");
  const int d = spectrum.dim();
  const double e0 = spectrum.energies.minCoeff();
  RealVector w(d);
  for (int j = 0; j < d; ++j) w[j] = std::exp(-beta * (spectrum.energies[j] - e0));
  w /= w.sum();
  DensityMatrix rho;
  rho.data = w.cast<cxd>().asDiagonal();
  rho.basis = BasisTag::Eigenbasis;
  return rho;
}

// Mixture of |10...0> and |0...0> with Boltzmann weights for the first qubit;
// the stationary state reached from the ground state when the chain coupling
// is switched off.
inline DensityMatrix local_thermal_state(const ChainSpec& spec) {
  spec.validate();
  const int d = spec.dim();
  const double w1 = std::exp(-spec.beta * spec.h);
  const double z = 1.0 + w1;
  DensityMatrix rho;
  rho.data = Matrix::Zero(d, d);
  rho.data(0, 0) = 1.0 / z;
  rho.data(1 << (spec.n_qubits - 1), 1 << (spec.n_qubits - 1)) = w1 / z;
  rho.basis = BasisTag::LocalBasis;
  return rho;
}

// Gibbs state of h_loc expressed in the full space (local basis; diagonal).
inline DensityMatrix local_gibbs_state(const ChainSpec& spec) {
  const int d = spec.dim();
  RealVector w(d);
  for (int b = 0; b < d; ++b) w[b] = std::exp(-spec.beta * spec.h * excitation_count(b));
  w /= w.sum();
  DensityMatrix rho;
  rho.data = w.cast<cxd>().asDiagonal();
  rho.basis = BasisTag::LocalBasis;
  return rho;
}

inline Matrix to_eigenbasis(const Matrix& local_op, const Spectrum& spectrum) {
  return spectrum.eigenvectors.adjoint() * local_op * spectrum.eigenvectors;
}

inline Matrix to_local_basis(const Matrix& eig_op, const Spectrum& spectrum) {
  return spectrum.eigenvectors * eig_op * spectrum.eigenvectors.adjoint();
}

}  // namespace chainbath
