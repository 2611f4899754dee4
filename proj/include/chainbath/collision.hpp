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

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "chainbath/chain.hpp"
#include "chainbath/common.hpp"
#include "chainbath/quadrature.hpp"
#include "chainbath/scattering.hpp"

namespace chainbath {

enum class Variant { Exact, Narrow, BandResolved, Local };
enum class KernelModel { Effusion, FlatControl };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Exact: return "exact";
    case Variant::Narrow: return "narrow";
    case Variant::BandResolved: return "band_resolved";
    case Variant::Local: return "local";
  }
  return "?";
}

inline Variant variant_from_name(const std::string& s) {
  if (s == "exact") return Variant::Exact;
  if (s == "narrow") return Variant::Narrow;
  if (s == "band_resolved" || s == "band") return Variant::BandResolved;
  if (s == "local") return Variant::Local;
  throw ValidationError("unknown variant '" + s + "'");
}

// Thermal incident-particle state: effusion momentum distribution on the
// diagonal, Gaussian coherence envelope of width sigma_p off it.
struct UnitKernel {
  double beta;
  double mass;
  double sigma_p;

  void validate() const {
    if (!(beta > 0) || !(mass > 0) || !(sigma_p > 0))
      throw InvalidSpec("unit kernel parameters must be positive");
  }
};

// mu_eff(p) = (beta p / m) exp(-beta p^2 / 2m); normalized on [0, inf).
inline double effusion_pdf(double p, const UnitKernel& k) {
  return (k.beta * p / k.mass) * std::exp(-k.beta * p * p / (2.0 * k.mass));
}

inline double unit_kernel(double p, double p_prime, const UnitKernel& k) {
  const double dp = p - p_prime;
  return effusion_pdf(0.5 * (p + p_prime), k) *
         std::exp(-dp * dp / (2.0 * k.sigma_p * k.sigma_p));
}

struct QuadratureInfo {
  int nodes = 0;
  int panels = 0;
  double p_max = 0.0;
  double tol_quad = 0.0;
  double conv_max_diff = 0.0;  // node-doubling change, 0 when the check is off
  double tp_defect = 0.0;
  double choi_min = 0.0;
  int flagged_gaps = 0;  // gaps with ambiguous band assignment, zeroed
};

// Rank-4 collision superoperator in the Hamiltonian eigenbasis, stored as the
// d^2 x d^2 matrix acting on column-major vectorized density matrices:
//   super(j' + d k', j + d k) = S^{jk}_{j'k'}.
struct CollisionTensor {
  Matrix super;
  Variant variant = Variant::Exact;
  int d = 0;
  ChainSpec spec;
  KernelModel kernel = KernelModel::Effusion;
  QuadratureInfo quad;
  RealMatrix element_error;  // per-element node-doubling difference

  cxd at(int jp, int kp, int j, int k) const { return super(jp + d * kp, j + d * k); }

  Matrix apply(const Matrix& rho) const {
    return unvectorize(super * vectorize(rho), d);
  }

  // Choi matrix C[(j',j),(k',k)] = S^{jk}_{j'k'}; Hermitian by construction.
  Matrix choi() const {
    Matrix c(d * d, d * d);
    for (int jp = 0; jp < d; ++jp)
      for (int j = 0; j < d; ++j)
        for (int kp = 0; kp < d; ++kp)
          for (int k = 0; k < d; ++k)
            c(jp + d * j, kp + d * k) = at(jp, kp, j, k);
    return c;
  }

  double trace_preservation_defect() const {
    double worst = 0.0;
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        cxd sum = 0.0;
        for (int jp = 0; jp < d; ++jp) sum += at(jp, jp, j, k);
        if (j == k) sum -= 1.0;
        worst = std::max(worst, std::abs(sum));
      }
    return worst;
  }
};

namespace detail {

// Band class of a transition gap, cut at the midpoints between 0 and +-h.
enum class GapClass { Intra, Absorb, Emit, None };

inline GapClass classify_gap(double delta, double h) {
  if (std::abs(delta) < 0.5 * h) return GapClass::Intra;
  if (std::abs(delta - h) < 0.5 * h) return GapClass::Absorb;
  if (std::abs(delta + h) < 0.5 * h) return GapClass::Emit;
  return GapClass::None;
}

// Everything one integration task needs.  The integrand is evaluated at the
// grid nodes in a fixed order so assembly is reproducible for any worker
// count.
struct ElementTask {
  int jp, kp, j, k;
  double lo = 0.0;
  std::vector<double> breakpoints;
  bool substituted = false;  // integrate over the outgoing momentum (D > 0)
  double two_m_d = 0.0;      // 2m(Delta1 - Delta2)
  bool zero = false;
};

// Local operators of the first qubit lifted to the eigenbasis.
struct LocalOps {
  Matrix p0, p1, fplus, fminus;  // projectors and normalized flips
};

inline LocalOps make_local_ops(const Spectrum& sp, const ChainSpec& spec) {
  LocalOps ops;
  ops.p0 = to_eigenbasis(embed_single(pauli::p0(), 1, spec.n_qubits), sp);
  ops.p1 = to_eigenbasis(embed_single(pauli::p1(), 1, spec.n_qubits), sp);
  ops.fplus = to_eigenbasis(embed_single(0.5 * pauli::splus(), 1, spec.n_qubits), sp);
  ops.fminus = to_eigenbasis(embed_single(0.5 * pauli::sminus(), 1, spec.n_qubits), sp);
  return ops;
}

inline void append_thresholds(std::vector<double>& brks, const RealVector& energies,
                              double base_level, double two_m_shift, double mass) {
  // Momenta where some channel opens for a factor with reference level
  // base_level, in the integration variable (shifted by two_m_shift).
  for (int l = 0; l < energies.size(); ++l) {
    const double q2 = 2.0 * mass * (energies[l] - base_level) - two_m_shift;
    if (q2 > 0) brks.push_back(std::sqrt(q2));
  }
}

}  // namespace detail

// Assembles the collision tensor for the requested variant.  Only canonical
// index tuples are integrated; conjugate partners follow from the Hermiticity
// relation S^{jk}_{j'k'} = [S^{kj}_{k'j'}]^* exactly.
inline CollisionTensor assemble_tensor(const ChainSpec& spec, const Spectrum& spectrum,
                                       Variant variant,
                                       const QuadratureConfig& quad = {},
                                       KernelModel kernel_model = KernelModel::Effusion,
                                       int threads = 1) {
  spec.validate();
  const int d = spectrum.dim();
  if (variant != Variant::Exact && !(spec.epsilon < spec.h / 4.0))
    throw BandOverlap("band structure requires epsilon < h/4");

  const UnitKernel kernel{spec.beta, spec.mass, spec.sigma_p};
  const double p_cut = std::sqrt(2.0 * spec.mass * quad.W / spec.beta);
  const double two_mh = 2.0 * spec.mass * spec.h;
  const double delta_omega = 1e-8 * spec.h;  // secular grouping tolerance
  const double m = spec.mass;

  const detail::LocalOps ops = detail::make_local_ops(spectrum, spec);
  const RealVector& eps = spectrum.energies;
  const RealVector& eps0 = spectrum.local_energies;

  // Canonical tuples: (j',j) lexicographically before (k',k).
  std::vector<detail::ElementTask> tasks;
  tasks.reserve(static_cast<std::size_t>(d) * d * (d * d + 1) / 2);
  int flagged = 0;

  for (int jp = 0; jp < d; ++jp)
    for (int j = 0; j < d; ++j)
      for (int kp = 0; kp < d; ++kp)
        for (int k = 0; k < d; ++k) {
          if (kp < jp || (kp == jp && k < j)) continue;
          detail::ElementTask t;
          t.jp = jp;
          t.kp = kp;
          t.j = j;
          t.k = k;

          const bool local_gaps = variant == Variant::Local;
          const double d1 = local_gaps ? eps0[jp] - eps0[j] : eps[jp] - eps[j];
          const double d2 = local_gaps ? eps0[kp] - eps0[k] : eps[kp] - eps[k];
          const double dd = d1 - d2;

          switch (variant) {
            case Variant::Exact:
              break;
            case Variant::Narrow:
              t.zero = std::abs(dd) > delta_omega;
              break;
            case Variant::BandResolved:
            case Variant::Local: {
              const auto c1 = detail::classify_gap(d1, spec.h);
              const auto c2 = detail::classify_gap(d2, spec.h);
              if (c1 == detail::GapClass::None && std::abs(d1) < 1.5 * spec.h) ++flagged;
              if (c2 == detail::GapClass::None && std::abs(d2) < 1.5 * spec.h) ++flagged;
              t.zero = c1 != c2 || c1 == detail::GapClass::None;
              break;
            }
          }
          if (t.zero) {
            tasks.push_back(std::move(t));
            continue;
          }

          const double use_dd = variant == Variant::Narrow ? 0.0 : dd;
          t.substituted = use_dd > 0.0;
          t.two_m_d = 2.0 * m * use_dd;
          if (t.substituted) {
            t.lo = std::sqrt(2.0 * m * std::max(0.0, d2));
          } else {
            t.lo = std::sqrt(2.0 * m * std::max(0.0, d1));
          }
          if (t.lo >= p_cut) {
            t.zero = true;  // empty momentum range
            tasks.push_back(std::move(t));
            continue;
          }

          // Channel-opening momenta of both factors, expressed in the
          // integration variable, plus the local amplitude threshold for the
          // band-resolved forms.
          if (variant == Variant::Exact || variant == Variant::Narrow) {
            if (t.substituted) {
              detail::append_thresholds(t.breakpoints, eps, eps[j], t.two_m_d, m);
              detail::append_thresholds(t.breakpoints, eps, eps[k], 0.0, m);
            } else {
              detail::append_thresholds(t.breakpoints, eps, eps[j], 0.0, m);
              detail::append_thresholds(t.breakpoints, eps, eps[k], -t.two_m_d, m);
            }
          } else {
            if (t.substituted) {
              if (two_mh - t.two_m_d > 0) t.breakpoints.push_back(std::sqrt(two_mh - t.two_m_d));
              t.breakpoints.push_back(std::sqrt(two_mh));
            } else {
              t.breakpoints.push_back(std::sqrt(two_mh));
              t.breakpoints.push_back(std::sqrt(two_mh + t.two_m_d));
            }
          }
          tasks.push_back(std::move(t));
        }

  const auto kernel_value = [&](double p_in, double p_out) {
    const double dp = p_in - p_out;
    const double envelope = std::exp(-dp * dp / (2.0 * kernel.sigma_p * kernel.sigma_p));
    if (kernel_model == KernelModel::FlatControl) return envelope / p_cut;
    return effusion_pdf(0.5 * (p_in + p_out), kernel) * envelope;
  };

  // rho_U((p + pi)/2) without the coherence envelope; the band-resolved
  // kernel assumption.
  const auto band_kernel_value = [&](double p_in, double p_out) {
    if (kernel_model == KernelModel::FlatControl) return 1.0 / p_cut;
    return effusion_pdf(0.5 * (p_in + p_out), kernel);
  };

  const SMatrixEvaluator evaluate_smatrix(spectrum, spec);

  const auto integrate_task = [&](const detail::ElementTask& t, int nodes_per_panel) -> cxd {
    if (t.zero) return cxd(0, 0);
    const MomentumGrid grid =
        build_momentum_grid(t.lo, p_cut, t.breakpoints, quad.panels, nodes_per_panel);
    cxd acc(0, 0);

    // Integration endpoints map onto channel thresholds by construction, and
    // the integrand vanishes like sqrt there; nodes that fall inside the
    // evaluator's threshold-rejection window are skipped.
    const auto near_threshold = [&](double e) {
      for (int l = 0; l < d; ++l)
        if (std::abs(e - eps[l]) < 1e-11) return true;
      return false;
    };

    if (variant == Variant::Exact || variant == Variant::Narrow) {
      for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
        const double q = grid.nodes[i];
        double p_in, p_out;
        if (t.substituted) {
          p_out = q;
          p_in = std::sqrt(q * q + t.two_m_d);
        } else {
          p_in = q;
          p_out = std::sqrt(q * q - t.two_m_d);
        }
        const double e1 = p_in * p_in / (2.0 * m) + eps[t.j];
        const double e2 = p_out * p_out / (2.0 * m) + eps[t.k];
        if (near_threshold(e1) || near_threshold(e2)) continue;
        // dp sqrt(p/pi) in the incident variable; the change of variable to
        // the outgoing momentum turns it into du sqrt(u/p).
        const double flux = std::sqrt(q / (t.substituted ? p_in : p_out));
        const double w =
            variant == Variant::Narrow
                ? grid.weights[i] *
                      (kernel_model == KernelModel::FlatControl ? 1.0 / p_cut
                                                                : effusion_pdf(p_in, kernel))
                : grid.weights[i] * flux * kernel_value(p_in, p_out);
        if (w == 0.0) continue;
        const SMatrixPair s1 = evaluate_smatrix(e1);
        const SMatrixPair s2 = e2 == e1 ? s1 : evaluate_smatrix(e2);
        acc += w * (s1.transmitted(t.jp, t.j) * std::conj(s2.transmitted(t.kp, t.k)) +
                    s1.reflected(t.jp, t.j) * std::conj(s2.reflected(t.kp, t.k)));
      }
      return acc;
    }

    // Band-resolved and local forms: scalar first-qubit amplitudes times
    // matrix elements of the lifted local operators.
    const auto c1 = detail::classify_gap(
        variant == Variant::Local ? eps0[t.jp] - eps0[t.j] : eps[t.jp] - eps[t.j], spec.h);
    const cxd m1 = c1 == detail::GapClass::Intra ? cxd(0, 0)
                   : c1 == detail::GapClass::Absorb ? ops.fplus(t.jp, t.j)
                                                    : ops.fminus(t.jp, t.j);
    const cxd m2 = c1 == detail::GapClass::Intra ? cxd(0, 0)
                   : c1 == detail::GapClass::Absorb ? ops.fplus(t.kp, t.k)
                                                    : ops.fminus(t.kp, t.k);

    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
      const double q = grid.nodes[i];
      double p_in, p_out;
      if (t.substituted) {
        p_out = q;
        p_in = std::sqrt(q * q + t.two_m_d);
      } else {
        p_in = q;
        p_out = std::sqrt(q * q - t.two_m_d);
      }
      const double w = variant == Variant::Local
                           ? grid.weights[i] * (kernel_model == KernelModel::FlatControl
                                                    ? 1.0 / p_cut
                                                    : effusion_pdf(p_in, kernel))
                           : grid.weights[i] * std::sqrt(q / (t.substituted ? p_in : p_out)) *
                                 band_kernel_value(p_in, p_out);
      if (w == 0.0) continue;
      const LocalAmplitudes a1 = smatrix_local_limit(p_in, 0, spec);
      const LocalAmplitudes a2 = p_out == p_in ? a1 : smatrix_local_limit(p_out, 0, spec);

      if (c1 == detail::GapClass::Intra) {
        const cxd f1t = a1.elastic_excited_t * ops.p1(t.jp, t.j) +
                        a1.elastic_ground_t * ops.p0(t.jp, t.j);
        const cxd f2t = a2.elastic_excited_t * ops.p1(t.kp, t.k) +
                        a2.elastic_ground_t * ops.p0(t.kp, t.k);
        const cxd f1r = a1.elastic_excited_r * ops.p1(t.jp, t.j) +
                        a1.elastic_ground_r * ops.p0(t.jp, t.j);
        const cxd f2r = a2.elastic_excited_r * ops.p1(t.kp, t.k) +
                        a2.elastic_ground_r * ops.p0(t.kp, t.k);
        acc += w * (f1t * std::conj(f2t) + f1r * std::conj(f2r));
      } else if (c1 == detail::GapClass::Absorb) {
        acc += w * (a1.flip_absorption_t * std::conj(a2.flip_absorption_t) +
                    a1.flip_absorption_r * std::conj(a2.flip_absorption_r)) *
               m1 * std::conj(m2);
      } else {
        acc += w * (a1.flip_emission_t * std::conj(a2.flip_emission_t) +
                    a1.flip_emission_r * std::conj(a2.flip_emission_r)) *
               m1 * std::conj(m2);
      }
    }
    return acc;
  };

  const auto assemble_pass = [&](int nodes_per_panel) {
    Matrix s = Matrix::Zero(d * d, d * d);
    parallel_for(tasks.size(), threads, [&](std::size_t i) {
      const auto& t = tasks[i];
      const cxd v = integrate_task(t, nodes_per_panel);
      const bool self = t.jp == t.kp && t.j == t.k;
      s(t.jp + d * t.kp, t.j + d * t.k) = self ? cxd(v.real(), 0.0) : v;
      if (!self) s(t.kp + d * t.jp, t.k + d * t.j) = std::conj(v);
    });
    return s;
  };

  CollisionTensor out;
  out.variant = variant;
  out.d = d;
  out.spec = spec;
  out.kernel = kernel_model;
  out.quad.nodes = quad.nodes;
  out.quad.panels = quad.panels;
  out.quad.p_max = p_cut;
  out.quad.tol_quad = quad.tol_quad;
  out.quad.flagged_gaps = flagged;

  if (quad.check_convergence) {
    const Matrix coarse = assemble_pass(quad.nodes);
    out.super = assemble_pass(2 * quad.nodes);
    out.element_error = (out.super - coarse).cwiseAbs();
    out.quad.conv_max_diff = out.element_error.maxCoeff();
    if (out.quad.conv_max_diff > quad.tol_quad)
      throw QuadratureNotConverged("node doubling changed an element by " +
                                   std::to_string(out.quad.conv_max_diff));
  } else {
    out.super = assemble_pass(quad.nodes);
    out.element_error = RealMatrix::Zero(d * d, d * d);
  }

  out.quad.tp_defect = out.trace_preservation_defect();
  if (quad.trace_projection) {
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        cxd sum = 0.0;
        for (int jp = 0; jp < d; ++jp) sum += out.at(jp, jp, j, k);
        if (j == k) sum -= 1.0;
        for (int jp = 0; jp < d; ++jp) out.super(jp + d * jp, j + d * k) -= sum / double(d);
      }
    out.quad.tp_defect = out.trace_preservation_defect();
  }
  out.quad.choi_min = min_eigenvalue(out.choi());
  return out;
}

// At most d^2 Kraus operators with sum_l M_l^dag M_l = I up to the tensor's
// trace-preservation defect.
struct KrausSet {
  std::vector<Matrix> operators;
  RealVector weights;  // retained Choi eigenvalues, descending

  double completeness_defect() const {
    if (operators.empty()) return 1.0;
    const Eigen::Index d = operators.front().rows();
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& op : operators) sum += op.adjoint() * op;
    return (sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  }

  // Rescales by the inverse square root of the completeness matrix so the
  // normalization sum_l M_l^dag M_l = I holds exactly.
  KrausSet normalized() const {
    if (operators.empty()) return *this;
    const Eigen::Index d = operators.front().rows();
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& op : operators) sum += op.adjoint() * op;
    Eigen::SelfAdjointEigenSolver<Matrix> es(sum);
    RealVector inv_sqrt(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i)
      inv_sqrt[i] = es.eigenvalues()[i] > 1e-300 ? 1.0 / std::sqrt(es.eigenvalues()[i]) : 0.0;
    Matrix fix = es.eigenvectors() * inv_sqrt.cast<cxd>().asDiagonal() *
                 es.eigenvectors().adjoint();
    KrausSet out = *this;
    for (auto& op : out.operators) op = op * fix;
    return out;
  }
};

inline KrausSet kraus_decomposition(const CollisionTensor& tensor, double rank_tol = 1e-10) {
  const int d = tensor.d;
  const Matrix choi = tensor.choi();

  // The secular and band-resolved constructions leave exact zeros in the
  // Choi matrix, splitting it into blocks (energy-transfer sectors, band
  // classes).  Eigen-decomposing per connected component of the support
  // graph keeps every operator inside its sector; degenerate eigenvalues can
  // then never mix operators across sectors.
  std::vector<int> component(d * d, -1);
  int n_components = 0;
  for (int seed = 0; seed < d * d; ++seed) {
    if (component[seed] >= 0) continue;
    std::vector<int> stack{seed};
    component[seed] = n_components;
    while (!stack.empty()) {
      const int r = stack.back();
      stack.pop_back();
      for (int c = 0; c < d * d; ++c)
        if (component[c] < 0 && choi(r, c) != cxd(0, 0)) {
          component[c] = n_components;
          stack.push_back(c);
        }
    }
    ++n_components;
  }

  std::vector<std::pair<double, Vector>> pairs;
  pairs.reserve(d * d);
  for (int comp = 0; comp < n_components; ++comp) {
    std::vector<int> idx;
    for (int i = 0; i < d * d; ++i)
      if (component[i] == comp) idx.push_back(i);
    Matrix block(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = 0; b < idx.size(); ++b) block(a, b) = choi(idx[a], idx[b]);
    Eigen::SelfAdjointEigenSolver<Matrix> es(block);
    for (Eigen::Index l = 0; l < es.eigenvalues().size(); ++l) {
      Vector full = Vector::Zero(d * d);
      for (std::size_t a = 0; a < idx.size(); ++a) full[idx[a]] = es.eigenvectors()(a, l);
      pairs.emplace_back(es.eigenvalues()[l], std::move(full));
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  if (pairs.back().first < -1e-8)
    throw NotCompletelyPositive("Choi eigenvalue " + std::to_string(pairs.back().first));

  KrausSet out;
  std::vector<double> kept;
  for (auto& [lambda, v] : pairs) {
    if (lambda <= rank_tol) break;
    // Deterministic phase: largest component real positive.
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    v *= std::conj(v[imax]) / std::abs(v[imax]);
    Matrix op(d, d);
    for (int jp = 0; jp < d; ++jp)
      for (int j = 0; j < d; ++j) op(jp, j) = std::sqrt(lambda) * v[jp + d * j];
    out.operators.push_back(std::move(op));
    kept.push_back(lambda);
  }
  out.weights = Eigen::Map<RealVector>(kept.data(), kept.size());
  return out;
}

// Max relative defect of S^{jj}_{j'j'} e^{beta Delta} = S^{j'j'}_{jj} over
// level pairs; pairs with both rates below the floor are skipped.
inline double check_detailed_balance(const CollisionTensor& tensor, const Spectrum& spectrum,
                                     double beta) {
  const int d = tensor.d;
  const double floor = 1e-14;
  double worst = 0.0;
  for (int j = 0; j < d; ++j)
    for (int jp = 0; jp < d; ++jp) {
      if (j == jp) continue;
      const double up = tensor.at(jp, jp, j, j).real();
      const double down = tensor.at(j, j, jp, jp).real();
      if (std::abs(up) < floor && std::abs(down) < floor) continue;
      const double delta = spectrum.gap(j, jp);
      const double resid = std::abs(up * std::exp(beta * delta) - down) /
                           std::max(std::abs(down), floor);
      worst = std::max(worst, resid);
    }
  return worst;
}

// Residual of sum_j S^{jj}_{j'k'} e^{-beta e0_j} / Z0 = delta_{j'k'} e^{-beta e0_j'} / Z0
// for the decoupled-chain tensor.
inline double check_sum_rule(const CollisionTensor& tensor, const Spectrum& spectrum,
                             double beta) {
  if (tensor.variant != Variant::Local)
    throw WrongVariant("sum rule applies to the local variant");
  const int d = tensor.d;
  RealVector w(d);
  for (int j = 0; j < d; ++j) w[j] = std::exp(-beta * spectrum.local_energies[j]);
  w /= w.sum();
  double worst = 0.0;
  for (int jp = 0; jp < d; ++jp)
    for (int kp = 0; kp < d; ++kp) {
      cxd sum = 0.0;
      for (int j = 0; j < d; ++j) sum += tensor.at(jp, kp, j, j) * w[j];
      if (jp == kp) sum -= w[jp];
      worst = std::max(worst, std::abs(sum));
    }
  return worst;
}

// --- serialization -----------------------------------------------------------

inline void save_tensor(const std::string& path, const CollisionTensor& t) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.precision(17);
  out << "# chainbath collision tensor\n";
  out << "format_version 1\n";
  out << "variant " << variant_name(t.variant) << "\n";
  out << "d " << t.d << "\n";
  out << "n_qubits " << t.spec.n_qubits << "\n";
  out << "h " << t.spec.h << "\n";
  out << "epsilon " << t.spec.epsilon << "\n";
  out << "g " << t.spec.g << "\n";
  out << "mass " << t.spec.mass << "\n";
  out << "beta " << t.spec.beta << "\n";
  out << "sigma_p " << t.spec.sigma_p << "\n";
  out << "gamma " << t.spec.gamma << "\n";
  out << "kernel " << (t.kernel == KernelModel::Effusion ? "effusion" : "flat_control") << "\n";
  out << "quad_nodes " << t.quad.nodes << "\n";
  out << "quad_panels " << t.quad.panels << "\n";
  out << "p_max " << t.quad.p_max << "\n";
  out << "tol_quad " << t.quad.tol_quad << "\n";
  out << "conv_max_diff " << t.quad.conv_max_diff << "\n";
  out << "tp_defect " << t.quad.tp_defect << "\n";
  out << "choi_min " << t.quad.choi_min << "\n";
  out << "# columns: jp kp j k re im\n";
  out << "entries " << (t.d * t.d * t.d * t.d) << "\n";
  for (int jp = 0; jp < t.d; ++jp)
    for (int kp = 0; kp < t.d; ++kp)
      for (int j = 0; j < t.d; ++j)
        for (int k = 0; k < t.d; ++k) {
          const cxd v = t.at(jp, kp, j, k);
          out << jp << ' ' << kp << ' ' << j << ' ' << k << ' ' << v.real() << ' '
              << v.imag() << '\n';
        }
  if (!out) throw IoError("write failed for " + path);
}

inline CollisionTensor load_tensor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  CollisionTensor t;
  std::string line;
  long entries = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format_version") {
      int v;
      ls >> v;
      if (v != 1) throw ParseError("unsupported tensor format version");
    } else if (key == "variant") {
      std::string name;
      ls >> name;
      t.variant = variant_from_name(name);
    } else if (key == "d") {
      ls >> t.d;
    } else if (key == "n_qubits") ls >> t.spec.n_qubits;
    else if (key == "h") ls >> t.spec.h;
    else if (key == "epsilon") ls >> t.spec.epsilon;
    else if (key == "g") ls >> t.spec.g;
    else if (key == "mass") ls >> t.spec.mass;
    else if (key == "beta") ls >> t.spec.beta;
    else if (key == "sigma_p") ls >> t.spec.sigma_p;
    else if (key == "gamma") ls >> t.spec.gamma;
    else if (key == "kernel") {
      std::string name;
      ls >> name;
      t.kernel = name == "effusion" ? KernelModel::Effusion : KernelModel::FlatControl;
    } else if (key == "quad_nodes") ls >> t.quad.nodes;
    else if (key == "quad_panels") ls >> t.quad.panels;
    else if (key == "p_max") ls >> t.quad.p_max;
    else if (key == "tol_quad") ls >> t.quad.tol_quad;
    else if (key == "conv_max_diff") ls >> t.quad.conv_max_diff;
    else if (key == "tp_defect") ls >> t.quad.tp_defect;
    else if (key == "choi_min") ls >> t.quad.choi_min;
    else if (key == "entries") {
      ls >> entries;
      break;
    } else {
      throw ParseError("unknown tensor header key '" + key + "'");
    }
  }
  if (t.d <= 0 || entries != static_cast<long>(t.d) * t.d * t.d * t.d)
    throw ParseError("tensor header missing dimension or entry count");
  t.super = Matrix::Zero(t.d * t.d, t.d * t.d);
  t.element_error = RealMatrix::Zero(t.d * t.d, t.d * t.d);
  for (long i = 0; i < entries; ++i) {
    int jp, kp, j, k;
    double re, im;
    if (!(in >> jp >> kp >> j >> k >> re >> im)) throw ParseError("truncated tensor table");
    t.super(jp + t.d * kp, j + t.d * k) = cxd(re, im);
  }
  return t;
}

}  // namespace chainbath
