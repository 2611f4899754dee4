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

#include <cmath>
#include <numbers>
#include <random>

#include "chainbath/collision.hpp"

using namespace chainbath;

namespace {

ChainSpec reference_spec(double eps = 0.1) {
  ChainSpec s;
  s.epsilon = eps;
  return s;  // other fields default to the reference values
}

QuadratureConfig fast_quad() {
  QuadratureConfig q;
  q.check_convergence = false;
  return q;
}

const Spectrum& default_spectrum() {
  static Spectrum s = diagonalize(reference_spec());
  return s;
}

const CollisionTensor& exact_default() {
  static CollisionTensor t =
      assemble_tensor(reference_spec(), default_spectrum(), Variant::Exact, fast_quad(),
                      KernelModel::Effusion, 2);
  return t;
}

const CollisionTensor& narrow_default() {
  static CollisionTensor t =
      assemble_tensor(reference_spec(), default_spectrum(), Variant::Narrow, fast_quad());
  return t;
}

const CollisionTensor& local_default() {
  static CollisionTensor t =
      assemble_tensor(reference_spec(), default_spectrum(), Variant::Local, fast_quad());
  return t;
}

// Test-only oracle: direct integration of an element in the incident-momentum
// variable, composite Simpson inside threshold-split intervals, no canonical
// tuple bookkeeping, no variable substitution, no conjugate filling.
cxd reintegrate_element(int jp, int kp, int j, int k, const ChainSpec& spec,
                        const Spectrum& spectrum, int pts_per_interval = 4001) {
  const double m = spec.mass;
  const auto& eps = spectrum.energies;
  const double d1 = eps[jp] - eps[j];
  const double d2 = eps[kp] - eps[k];
  const double dd = d1 - d2;
  const double p_inf = std::sqrt(2 * m * std::max({0.0, d1, dd}));
  const double p_cut = std::sqrt(2 * m * 40.0 / spec.beta) + std::sqrt(std::abs(2 * m * dd));
  if (p_inf >= p_cut) return 0;

  std::vector<double> edges{p_inf, p_cut};
  for (int l = 0; l < spectrum.dim(); ++l) {
    const double q1 = 2 * m * (eps[l] - eps[j]);
    if (q1 > 0) edges.push_back(std::sqrt(q1));
    const double q2 = 2 * m * (eps[l] - eps[k]) + 2 * m * dd;
    if (q2 > 0) edges.push_back(std::sqrt(q2));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              edges.end());

  const SMatrixEvaluator evaluate(spectrum, spec);
  const UnitKernel kernel{spec.beta, spec.mass, spec.sigma_p};
  cxd total = 0;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double a = edges[e], b = edges[e + 1];
    if (b <= p_inf || a >= p_cut) continue;
    const int n = pts_per_interval | 1;
    const double dtheta = (std::numbers::pi / 2) / (n - 1);
    cxd acc = 0;
    for (int i = 0; i < n; ++i) {
      const double theta = i * dtheta;
      const double p = a + (b - a) * std::sin(theta) * std::sin(theta);
      const double jac = (b - a) * std::sin(2 * theta);
      if (jac == 0.0) continue;
      const double pi2 = p * p - 2 * m * dd;
      if (pi2 <= 0) continue;
      const double pi = std::sqrt(pi2);
      const double e1 = p * p / (2 * m) + eps[j];
      const double e2 = pi2 / (2 * m) + eps[k];
      bool skip = false;
      for (int l = 0; l < spectrum.dim(); ++l)
        if (std::abs(e1 - eps[l]) < 1e-11 || std::abs(e2 - eps[l]) < 1e-11) skip = true;
      if (skip) continue;
      const auto s1 = evaluate(e1);
      const auto s2 = evaluate(e2);
      const cxd f = std::sqrt(p / pi) * unit_kernel(p, pi, kernel) *
                    (s1.transmitted(jp, j) * std::conj(s2.transmitted(kp, k)) +
                     s1.reflected(jp, j) * std::conj(s2.reflected(kp, k)));
      const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * f * jac;
    }
    total += acc * dtheta / 3.0;
  }
  return total;
}

}  // namespace

TEST(Effusion, FrozenValuesAndMode) {
  UnitKernel k{0.1, 0.1, 0.5};
  EXPECT_NEAR(effusion_pdf(1.0, k), 0.60653065971263342, 1e-15);
  // mode at sqrt(m/beta) = 1
  EXPECT_GT(effusion_pdf(1.0, k), effusion_pdf(0.9, k));
  EXPECT_GT(effusion_pdf(1.0, k), effusion_pdf(1.1, k));
}

TEST(Effusion, NormalizedUnderModuleQuadrature) {
  UnitKernel k{0.1, 0.1, 0.5};
  const double p_cut = std::sqrt(2 * 0.1 * 40 / 0.1);
  auto grid = build_momentum_grid(0, p_cut, {}, 8, 32);
  double sum = 0;
  for (std::size_t i = 0; i < grid.nodes.size(); ++i)
    sum += grid.weights[i] * effusion_pdf(grid.nodes[i], k);
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Effusion, KernelValues) {
  UnitKernel k{0.1, 0.1, 0.5};
  EXPECT_NEAR(unit_kernel(1.3, 1.3, k), effusion_pdf(1.3, k), 1e-16);
  const double s2 = 0.5 * std::numbers::sqrt2;
  EXPECT_NEAR(unit_kernel(1.0 + s2 / 2, 1.0 - s2 / 2, k),
              effusion_pdf(1.0, k) * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(unit_kernel(1.2, 0.8, k), 0.44043165450599926, 1e-15);
}

TEST(Effusion, ShiftIdentity) {
  // integral of mu f(c_+) over [0,inf) equals e^{beta h} times the integral of
  // mu f(c_-) over [sqrt(2mh),inf), f(x) = x^2/(1+x^2)^2
  ChainSpec spec = reference_spec();
  UnitKernel kern{spec.beta, spec.mass, spec.sigma_p};
  const double a2 = spec.g * spec.mass * spec.g * spec.mass;
  const double two_mh = 2 * spec.mass * spec.h;
  const double p_cut = std::sqrt(2 * spec.mass * 40 / spec.beta);
  const auto f = [&](double s) { return a2 * s / ((s + a2) * (s + a2)); };

  auto g1 = build_momentum_grid(0, p_cut, {std::sqrt(two_mh)}, 8, 48);
  double lhs = 0;
  for (std::size_t i = 0; i < g1.nodes.size(); ++i) {
    const double p = g1.nodes[i];
    lhs += g1.weights[i] * effusion_pdf(p, kern) * f(p * std::sqrt(p * p + two_mh));
  }
  auto g2 = build_momentum_grid(std::sqrt(two_mh), std::sqrt(p_cut * p_cut + two_mh),
                                {}, 8, 48);
  double rhs = 0;
  for (std::size_t i = 0; i < g2.nodes.size(); ++i) {
    const double p = g2.nodes[i];
    rhs += g2.weights[i] * effusion_pdf(p, kern) * f(p * std::sqrt(p * p - two_mh));
  }
  EXPECT_NEAR(lhs, std::exp(spec.beta * spec.h) * rhs, 1e-8);
}

TEST(Assembly, IdentityAtZeroCoupling) {
  ChainSpec spec = reference_spec();
  spec.g = 0.0;
  auto spectrum = diagonalize(spec);
  for (Variant v : {Variant::Exact, Variant::Narrow, Variant::BandResolved, Variant::Local}) {
    auto t = assemble_tensor(spec, spectrum, v, fast_quad());
    EXPECT_LT((t.super - Matrix::Identity(64, 64)).cwiseAbs().maxCoeff(), 1e-11)
        << variant_name(v);
  }
}

TEST(Assembly, ExactTensorStructureAtReferenceParameters) {
  // convergence check on: node doubling must stay within tol_quad
  QuadratureConfig quad;
  auto t = assemble_tensor(reference_spec(), default_spectrum(), Variant::Exact, quad,
                           KernelModel::Effusion, 2);
  EXPECT_LE(t.quad.conv_max_diff, quad.tol_quad);
  EXPECT_LE(t.quad.tp_defect, 1e-6);
  EXPECT_GE(t.quad.choi_min, -1e-8);
  // Hermiticity relation holds exactly by construction
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> pick(0, 7);
  for (int trial = 0; trial < 32; ++trial) {
    const int jp = pick(rng), kp = pick(rng), j = pick(rng), k = pick(rng);
    EXPECT_EQ(t.at(jp, kp, j, k), std::conj(t.at(kp, jp, k, j)));
  }
  EXPECT_LE(check_detailed_balance(t, default_spectrum(), 0.1), 1e-4);
}

TEST(Assembly, DetailedBalanceRatios) {
  const auto& t = exact_default();
  const auto& sp = default_spectrum();
  for (int j1 : sp.band_index[1]) {
    const double up = t.at(j1, j1, 0, 0).real();
    const double down = t.at(0, 0, j1, j1).real();
    const double boltz = std::exp(-0.1 * sp.gap(0, j1));
    EXPECT_NEAR(up / down, boltz, 1e-4 * boltz) << "level " << j1;
    EXPECT_NEAR(boltz, std::exp(-0.4), 0.06);  // roughly e^{-beta h}
  }
}

TEST(Assembly, FlatKernelBreaksDetailedBalance) {
  auto t = assemble_tensor(reference_spec(), default_spectrum(), Variant::Exact, fast_quad(),
                           KernelModel::FlatControl, 2);
  EXPECT_GE(check_detailed_balance(t, default_spectrum(), 0.1), 1e-2);
}

TEST(Assembly, NarrowSecularZeroPattern) {
  const auto& t = narrow_default();
  const auto& sp = default_spectrum();
  const double delta_omega = 1e-8 * 4.0;
  for (int jp = 0; jp < 8; ++jp)
    for (int kp = 0; kp < 8; ++kp)
      for (int j = 0; j < 8; ++j)
        for (int k = 0; k < 8; ++k) {
          const double dd = sp.gap(j, jp) - sp.gap(k, kp);
          if (std::abs(dd) > delta_omega)
            ASSERT_EQ(t.at(jp, kp, j, k), cxd(0, 0));
        }
}

TEST(Assembly, NarrowTensorIsTPAndCP) {
  EXPECT_LE(narrow_default().quad.tp_defect, 1e-6);
  EXPECT_GE(narrow_default().quad.choi_min, -1e-8);
}

TEST(Assembly, HermiticityAgainstIndependentReintegration) {
  const auto& t = exact_default();
  const auto& sp = default_spectrum();
  const ChainSpec spec = reference_spec();
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> pick(0, 7);
  for (int trial = 0; trial < 10; ++trial) {
    const int jp = pick(rng), kp = pick(rng), j = pick(rng), k = pick(rng);
    const cxd direct = reintegrate_element(jp, kp, j, k, spec, sp);
    const cxd partner = reintegrate_element(kp, jp, k, j, spec, sp);
    EXPECT_LT(std::abs(direct - t.at(jp, kp, j, k)), 1e-7)
        << jp << kp << j << k << " got " << t.at(jp, kp, j, k) << " want " << direct;
    EXPECT_LT(std::abs(direct - std::conj(partner)), 1e-7);
  }
}

TEST(Assembly, BandOverlapRejected) {
  ChainSpec spec = reference_spec(2.0);  // epsilon >= h/4
  auto spectrum = diagonalize(spec);
  for (Variant v : {Variant::Narrow, Variant::BandResolved, Variant::Local})
    EXPECT_THROW(assemble_tensor(spec, spectrum, v, fast_quad()), BandOverlap);
}

TEST(Assembly, UnconvergedQuadratureRejected) {
  QuadratureConfig quad;
  quad.panels = 1;
  quad.nodes = 2;
  quad.tol_quad = 1e-12;
  EXPECT_THROW(assemble_tensor(reference_spec(), default_spectrum(), Variant::Exact, quad,
                               KernelModel::Effusion, 2),
               QuadratureNotConverged);
}

TEST(Assembly, EmptyMomentumRangeGivesZero) {
  QuadratureConfig quad = fast_quad();
  quad.W = 0.3;  // p_max below the absorption threshold
  auto t = assemble_tensor(reference_spec(), default_spectrum(), Variant::Local, quad);
  const auto& sp = default_spectrum();
  const int up = sp.band_index[1][0];
  EXPECT_EQ(t.at(up, up, 0, 0), cxd(0, 0));
}

TEST(Assembly, ExactApproachesNarrowAsDispersionShrinks) {
  const auto& narrow = narrow_default();
  double prev = 1e9;
  for (double sp : {0.5, 0.1, 0.02}) {
    ChainSpec spec = reference_spec();
    spec.sigma_p = sp;
    auto ex = assemble_tensor(spec, default_spectrum(), Variant::Exact, fast_quad(),
                              KernelModel::Effusion, 2);
    const double diff = (ex.super - narrow.super).cwiseAbs().maxCoeff();
    EXPECT_LT(diff, prev) << "sigma_p " << sp;
    prev = diff;
  }
  EXPECT_LT(prev, 0.02);
}

TEST(Assembly, ExactApproachesLocalLinearly) {
  // over the entries the decoupled-chain form keeps; the pinned-to-zero
  // cross-class entries stay at their Gaussian-suppressed exact values
  std::vector<double> diffs;
  for (double e : {0.1, 0.01, 0.001}) {
    ChainSpec spec = reference_spec(e);
    auto spectrum = diagonalize(spec);
    auto ex = assemble_tensor(spec, spectrum, Variant::Exact, fast_quad(),
                              KernelModel::Effusion, 2);
    auto lo = assemble_tensor(spec, spectrum, Variant::Local, fast_quad());
    double matched = 0;
    for (int i = 0; i < 64; ++i)
      for (int jj = 0; jj < 64; ++jj)
        if (std::abs(lo.super(i, jj)) > 1e-14)
          matched = std::max(matched, std::abs(ex.super(i, jj) - lo.super(i, jj)));
    diffs.push_back(matched);
  }
  EXPECT_GT(diffs[0], diffs[1]);
  EXPECT_GT(diffs[1], diffs[2]);
  EXPECT_NEAR(diffs[1] / diffs[0], 0.1, 0.05);
  EXPECT_NEAR(diffs[2] / diffs[1], 0.1, 0.05);
}

TEST(Assembly, BandResolvedStructure) {
  auto band = assemble_tensor(reference_spec(), default_spectrum(), Variant::BandResolved,
                              fast_quad());
  // The band-resolved equations integrate the absorption family from the
  // exact-gap momentum while the eps = 0 amplitudes open at sqrt(2mh); the
  // uncompensated slice leaves an O(eps^{3/2}) trace defect.
  EXPECT_LT(band.quad.tp_defect, 1e-3);
  EXPECT_GT(band.quad.tp_defect, 1e-6);
  EXPECT_GE(band.quad.choi_min, -1e-8);

  ChainSpec small = reference_spec(0.01);
  auto spectrum = diagonalize(small);
  auto band_small = assemble_tensor(small, spectrum, Variant::BandResolved, fast_quad());
  EXPECT_LT(band_small.quad.tp_defect / band.quad.tp_defect, 0.1);

  // balances against band energies, not exact gaps
  const auto& sp = default_spectrum();
  for (int j1 : sp.band_index[1]) {
    const double up = band.at(j1, j1, 0, 0).real();
    const double down = band.at(0, 0, j1, j1).real();
    EXPECT_NEAR(up / down, std::exp(-0.4), 2e-2) << j1;
  }
}

TEST(Assembly, TraceProjectionRepairsDefect) {
  QuadratureConfig quad = fast_quad();
  quad.trace_projection = true;
  auto band = assemble_tensor(reference_spec(), default_spectrum(), Variant::BandResolved, quad);
  EXPECT_LE(band.quad.tp_defect, 1e-13);
}

TEST(SumRule, LocalTensorSatisfiesIt) {
  EXPECT_LE(check_sum_rule(local_default(), default_spectrum(), 0.1), 1e-6);
  EXPECT_THROW(check_sum_rule(exact_default(), default_spectrum(), 0.1), WrongVariant);
  // every gap fits a band window cleanly at these parameters
  EXPECT_EQ(local_default().quad.flagged_gaps, 0);
}

TEST(SumRule, FlatKernelNegativeControl) {
  auto t = assemble_tensor(reference_spec(), default_spectrum(), Variant::Local, fast_quad(),
                           KernelModel::FlatControl);
  EXPECT_GE(check_sum_rule(t, default_spectrum(), 0.1), 1e-2);
}

TEST(Kraus, IdentityTensor) {
  ChainSpec spec = reference_spec();
  spec.g = 0.0;
  auto spectrum = diagonalize(spec);
  auto t = assemble_tensor(spec, spectrum, Variant::Exact, fast_quad());
  auto kraus = kraus_decomposition(t);
  ASSERT_EQ(kraus.operators.size(), 1u);
  EXPECT_LT((kraus.operators[0] - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Kraus, ReconstructsExactTensor) {
  const auto& t = exact_default();
  auto kraus = kraus_decomposition(t);
  EXPECT_LE(kraus.operators.size(), 64u);
  EXPECT_LT(kraus.completeness_defect(), 1e-6);
  Matrix rebuilt = Matrix::Zero(64, 64);
  for (const auto& op : kraus.operators)
    for (int jp = 0; jp < 8; ++jp)
      for (int kp = 0; kp < 8; ++kp)
        for (int j = 0; j < 8; ++j)
          for (int k = 0; k < 8; ++k)
            rebuilt(jp + 8 * kp, j + 8 * k) += op(jp, j) * std::conj(op(kp, k));
  EXPECT_LT((rebuilt - t.super).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Kraus, NarrowOperatorsAreEnergyLadders) {
  auto kraus = kraus_decomposition(narrow_default());
  const auto& sp = default_spectrum();
  ASSERT_FALSE(kraus.operators.empty());
  for (const auto& op : kraus.operators) {
    const double scale = op.cwiseAbs().maxCoeff();
    double omega = 0;
    bool found = false;
    for (int jp = 0; jp < 8; ++jp)
      for (int j = 0; j < 8; ++j) {
        if (std::abs(op(jp, j)) < 1e-7 * scale) continue;
        const double w = sp.gap(j, jp);
        if (!found) {
          omega = w;
          found = true;
        } else {
          EXPECT_NEAR(w, omega, 1e-6);
        }
      }
  }
}

TEST(Serialization, RoundTrip) {
  const auto& t = local_default();
  save_tensor("tensor_roundtrip.txt", t);
  auto back = load_tensor("tensor_roundtrip.txt");
  EXPECT_EQ(back.d, t.d);
  EXPECT_TRUE(back.variant == t.variant);
  EXPECT_EQ((back.super - t.super).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(back.quad.tp_defect, t.quad.tp_defect);
  EXPECT_EQ(back.spec.epsilon, t.spec.epsilon);
}
