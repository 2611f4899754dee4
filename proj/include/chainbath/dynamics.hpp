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
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "chainbath/chain.hpp"
#include "chainbath/collision.hpp"
#include "chainbath/common.hpp"

namespace chainbath {

// Generator of the master equation as a d^2 x d^2 matrix on column-major
// vectorized density matrices: vec(A rho B) = (B^T (x) A) vec(rho).
struct Liouvillian {
  Matrix matrix;
  double gamma = 0.0;
  std::string source = "generic";

  struct SpectralDecomposition {
    Vector eigenvalues;
    Matrix vectors;
    Matrix inverse;
    double condition = 0.0;
  };

  int dim() const { return static_cast<int>(std::lround(std::sqrt(double(matrix.rows())))); }

  double trace_annihilation_defect() const {
    const int d = dim();
    Vector id = vectorize(Matrix::Identity(d, d));
    return (id.adjoint() * matrix).cwiseAbs().maxCoeff();
  }

  const SpectralDecomposition& spectral() const {
    if (!spectral_) {
      Eigen::ComplexEigenSolver<Matrix> es(matrix);
      if (es.info() != Eigen::Success)
        throw IllConditionedSpectral("eigen-decomposition failed");
      auto sd = std::make_shared<SpectralDecomposition>();
      sd->eigenvalues = es.eigenvalues();
      sd->vectors = es.eigenvectors();
      Eigen::JacobiSVD<Matrix> svd(sd->vectors);
      sd->condition = svd.singularValues()(0) /
                      svd.singularValues()(svd.singularValues().size() - 1);
      if (sd->condition > 1e10)
        throw IllConditionedSpectral("eigenvector condition " + std::to_string(sd->condition));
      sd->inverse = sd->vectors.partialPivLu().solve(Matrix::Identity(matrix.rows(), matrix.cols()));
      spectral_ = std::move(sd);
    }
    return *spectral_;
  }

 private:
  mutable std::shared_ptr<SpectralDecomposition> spectral_;
};

inline Matrix hamiltonian_superoperator(const Matrix& h) {
  const auto d = h.rows();
  Matrix id = Matrix::Identity(d, d);
  return -kI / kHbar *
         (Eigen::kroneckerProduct(id, h) - Eigen::kroneckerProduct(h.transpose(), id));
}

// dot rho = -i[H, rho] + Gamma (S - I) rho: the map applied at Poissonian
// collision times.  Mixing Hamiltonian and tensor variants is the caller's
// choice (H(eps) with the decoupled-chain tensor gives the local equation).
inline Liouvillian poisson_generator(const Matrix& h, const CollisionTensor& tensor,
                                     double gamma) {
  if (h.rows() != tensor.d || h.cols() != tensor.d)
    throw DimensionMismatch("H is " + std::to_string(h.rows()) + "x" +
                            std::to_string(h.cols()) + ", tensor dimension " +
                            std::to_string(tensor.d));
  Liouvillian out;
  out.gamma = gamma;
  out.source = "poisson/" + variant_name(tensor.variant);
  out.matrix = hamiltonian_superoperator(h) +
               gamma * (tensor.super - Matrix::Identity(tensor.d * tensor.d, tensor.d * tensor.d));
  return out;
}

// dot rho = -i[H, rho] + Gamma sum_l (L_l rho L_l^dag - {rho, L_l^dag L_l}/2).
inline Liouvillian generic_generator(const Matrix& h, const std::vector<Matrix>& ops,
                                     double gamma) {
  const auto d = h.rows();
  Matrix id = Matrix::Identity(d, d);
  Matrix l = hamiltonian_superoperator(h);
  for (const auto& op : ops) {
    if (op.rows() != d || op.cols() != d) throw DimensionMismatch("jump operator size");
    Matrix opdop = op.adjoint() * op;
    l += gamma * (Eigen::kroneckerProduct(op.conjugate(), op) -
                  0.5 * Eigen::kroneckerProduct(id, opdop) -
                  0.5 * Eigen::kroneckerProduct(opdop.transpose(), id))
             .eval();
  }
  Liouvillian out;
  out.matrix = std::move(l);
  out.gamma = gamma;
  return out;
}

// Short-interaction repeated-coupling limit: a single jump operator V at rate
// g^2 Tr[B^2 rho_E] / hbar^2.
inline Liouvillian repeated_interaction_generator(const Matrix& h, const Matrix& v,
                                                  double b_second_moment, double g) {
  if (b_second_moment < 0) throw InvalidSpec("second moment must be >= 0");
  const double rate = g * g * b_second_moment / (kHbar * kHbar);
  Liouvillian out = generic_generator(h, {v}, rate);
  out.source = "repeated_interaction";
  return out;
}

enum class EvolveMethod { SpectralExp, RK4 };

struct Trajectory {
  std::vector<double> times;
  std::vector<Matrix> states;
};

namespace detail {

inline Matrix propagate_spectral(const Liouvillian& l, const Matrix& rho0, double t) {
  const auto& sd = l.spectral();
  // The generator annihilates the trace, so a null eigenvalue exists exactly;
  // solver noise of order 1e-15 on it would leak trace like e^{noise * t} at
  // late times.
  const double clamp = 1e-12 * sd.eigenvalues.cwiseAbs().maxCoeff();
  Vector coeff = sd.inverse * vectorize(rho0);
  Vector evolved(coeff.size());
  for (Eigen::Index i = 0; i < coeff.size(); ++i) {
    const cxd lambda = std::abs(sd.eigenvalues[i]) < clamp ? cxd(0, 0) : sd.eigenvalues[i];
    evolved[i] = std::exp(lambda * t) * coeff[i];
  }
  return unvectorize(sd.vectors * evolved, rho0.rows());
}

}  // namespace detail

inline Trajectory evolve(const Liouvillian& l, const DensityMatrix& rho0,
                         const std::vector<double>& times,
                         EvolveMethod method = EvolveMethod::SpectralExp) {
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (!(times[i + 1] > times[i])) throw ValidationError("times must be increasing");
  rho0.check();

  Trajectory out;
  out.times = times;
  out.states.reserve(times.size());

  if (method == EvolveMethod::SpectralExp) {
    for (double t : times) out.states.push_back(detail::propagate_spectral(l, rho0.data, t));
    return out;
  }

  // RK4 with a fixed step bounded by 0.1 / ||L||.
  const double norm = l.matrix.cwiseAbs().rowwise().sum().maxCoeff();
  const double dt_max = norm > 0 ? 0.1 / norm : std::numeric_limits<double>::infinity();
  Vector v = vectorize(rho0.data);
  double t = 0.0;
  for (double target : times) {
    const double span = target - t;
    if (span > 0) {
      const long steps = std::max(1L, static_cast<long>(std::ceil(span / dt_max)));
      const double dt = span / double(steps);
      for (long s = 0; s < steps; ++s) {
        Vector k1 = l.matrix * v;
        Vector k2 = l.matrix * (v + 0.5 * dt * k1);
        Vector k3 = l.matrix * (v + 0.5 * dt * k2);
        Vector k4 = l.matrix * (v + dt * k3);
        v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      t = target;
    }
    out.states.push_back(unvectorize(v, rho0.data.rows()));
  }
  return out;
}

// Null eigenvector of the generator, Hermitized, positivity-clipped and
// normalized; uniqueness is verified through the spectral gap.
inline DensityMatrix steady_state(const Liouvillian& l) {
  const auto& sd = l.spectral();
  Eigen::Index best = 0, second = -1;
  for (Eigen::Index i = 1; i < sd.eigenvalues.size(); ++i) {
    if (std::abs(sd.eigenvalues[i]) < std::abs(sd.eigenvalues[best])) {
      second = best;
      best = i;
    } else if (second < 0 || std::abs(sd.eigenvalues[i]) < std::abs(sd.eigenvalues[second])) {
      second = i;
    }
  }
  if (second >= 0 && std::abs(sd.eigenvalues[second]) < 1e-10)
    throw DegenerateSteadyState("two near-null eigenvalues: " +
                                std::to_string(std::abs(sd.eigenvalues[best])) + ", " +
                                std::to_string(std::abs(sd.eigenvalues[second])));

  const int d = l.dim();
  Matrix rho = unvectorize(sd.vectors.col(best), d);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  if (std::abs(rho.trace()) < 1e-14) throw DegenerateSteadyState("traceless null vector");
  rho /= rho.trace();

  Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
  RealVector vals = es.eigenvalues();
  if (vals.minCoeff() < -1e-10)
    throw NotCompletelyPositive("steady state eigenvalue " + std::to_string(vals.minCoeff()));
  for (Eigen::Index i = 0; i < vals.size(); ++i) vals[i] = std::max(vals[i], 0.0);
  vals /= vals.sum();
  DensityMatrix out;
  out.data = es.eigenvectors() * vals.cast<cxd>().asDiagonal() * es.eigenvectors().adjoint();
  out.basis = BasisTag::Eigenbasis;
  return out;
}

// First-order stationary coherences of the weak-rate expansion,
//   rho^(1)_{jk} = -(i hbar / (e_j - e_k)) sum_j' S^{j'j'}_{jk} e^{-beta e_j'} / Z,
// returned already scaled by the collision rate (the usable prediction).
inline Matrix perturbative_coherences(const CollisionTensor& tensor, const Spectrum& spectrum,
                                      double beta, double gamma = 1.0) {
  const int d = tensor.d;
  const double tol_gap = 1e-10 * tensor.spec.h;
  RealVector w(d);
  for (int j = 0; j < d; ++j) w[j] = std::exp(-beta * spectrum.energies[j]);
  w /= w.sum();
  Matrix out = Matrix::Zero(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      if (j == k) continue;
      const double gap = spectrum.gap(k, j);  // e_j - e_k
      if (std::abs(gap) < tol_gap)
        throw DegenerateGap("levels " + std::to_string(j) + "," + std::to_string(k));
      cxd sum = 0;
      for (int jp = 0; jp < d; ++jp) sum += tensor.at(j, k, jp, jp) * w[jp];
      out(j, k) = -gamma * kI * kHbar / gap * sum;
    }
  return out;
}

struct ObservableRecord {
  RealVector populations;        // diagonal in the eigenbasis
  RealVector band_populations;   // summed per excitation number
  double band1_over_ground = 0;  // first-band total over ground population
  double beta_eff = 0;           // NaN when a population is non-positive
  cxd coherence;                 // default pair (2,3)
};

// beta_eff(j -> k) = log(rho_jj / rho_kk) / Delta_kj.
inline double effective_inverse_temperature(const Matrix& rho, const Spectrum& spectrum,
                                            int j, int k) {
  const double pj = rho(j, j).real();
  const double pk = rho(k, k).real();
  if (pj <= 1e-14 || pk <= 1e-14) return std::numeric_limits<double>::quiet_NaN();
  return std::log(pj / pk) / spectrum.gap(j, k);
}

inline ObservableRecord observables(const Matrix& rho_eigenbasis, const Spectrum& spectrum,
                                    std::pair<int, int> beta_pair = {-1, -1},
                                    std::pair<int, int> coherence_pair = {2, 3}) {
  const int d = spectrum.dim();
  ObservableRecord rec;
  rec.populations.resize(d);
  for (int j = 0; j < d; ++j) rec.populations[j] = rho_eigenbasis(j, j).real();
  rec.band_populations = RealVector::Zero(spectrum.band_index.size());
  for (std::size_t n = 0; n < spectrum.band_index.size(); ++n)
    for (int j : spectrum.band_index[n]) rec.band_populations[n] += rec.populations[j];
  rec.band1_over_ground =
      spectrum.band_index.size() > 1 && rec.populations[0] > 1e-300
          ? rec.band_populations[1] / rec.populations[0]
          : std::numeric_limits<double>::quiet_NaN();
  if (beta_pair.first < 0) {
    // default: ground state against the middle eigenstate of the first band
    const auto& band1 = spectrum.band_index.size() > 1 ? spectrum.band_index[1]
                                                       : spectrum.band_index[0];
    beta_pair = {0, band1[band1.size() / 2]};
  }
  rec.beta_eff =
      effective_inverse_temperature(rho_eigenbasis, spectrum, beta_pair.first, beta_pair.second);
  rec.coherence = coherence_pair.first < d && coherence_pair.second < d
                      ? rho_eigenbasis(coherence_pair.first, coherence_pair.second)
                      : cxd(0, 0);
  return rec;
}

// Relative entropy S(rho || sigma); both must be states.
inline double relative_entropy(const Matrix& rho, const Matrix& sigma) {
  Eigen::SelfAdjointEigenSolver<Matrix> er(rho), es(sigma);
  double out = 0;
  for (Eigen::Index i = 0; i < er.eigenvalues().size(); ++i) {
    const double p = std::max(er.eigenvalues()[i], 0.0);
    if (p < 1e-300) continue;
    out += p * std::log(p);
  }
  // -Tr[rho log sigma] in sigma's eigenbasis
  Matrix overlap = es.eigenvectors().adjoint() * rho * es.eigenvectors();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double q = std::max(es.eigenvalues()[i], 1e-300);
    out -= overlap(i, i).real() * std::log(q);
  }
  return out;
}

}  // namespace chainbath
