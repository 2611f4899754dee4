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

#include "chainbath/chain.hpp"

using namespace chainbath;

namespace {

ChainSpec default_spec(int n, double eps) {
  ChainSpec s;
  s.n_qubits = n;
  s.h = 4.0;
  s.epsilon = eps;
  return s;
}

}  // namespace

TEST(ChainSpec, RejectsBadParameters) {
  ChainSpec s = default_spec(3, 0.1);
  s.epsilon = -1.0;
  EXPECT_THROW(s.validate(), InvalidSpec);
  s = default_spec(0, 0.1);
  EXPECT_THROW(s.validate(), InvalidSpec);
  s = default_spec(2, 0.1);
  s.beta = 0.0;
  EXPECT_THROW(s.validate(), InvalidSpec);
}

TEST(Hamiltonian, SingleQubit) {
  auto triple = build_chain_hamiltonian(default_spec(1, 0.7));
  // basis (|0>, |1>): energies 0 and h
  EXPECT_NEAR(std::abs(triple.h_total(0, 0)), 0.0, 1e-15);
  EXPECT_NEAR(triple.h_total(1, 1).real(), 4.0, 1e-15);
  EXPECT_NEAR(triple.h_int.cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Hamiltonian, HermitianAndCommuting) {
  auto triple = build_chain_hamiltonian(default_spec(3, 0.1));
  EXPECT_LT(hermiticity_defect(triple.h_loc), 1e-14);
  EXPECT_LT(hermiticity_defect(triple.h_int), 1e-14);
  EXPECT_LT(hermiticity_defect(triple.h_total), 1e-14);
  Matrix comm = triple.h_loc * triple.h_int - triple.h_int * triple.h_loc;
  EXPECT_LT(comm.cwiseAbs().maxCoeff(), 1e-12);
  Matrix sum = triple.h_loc + 0.1 * triple.h_int - triple.h_total;
  EXPECT_LT(sum.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Hamiltonian, NonInteractingBandEnergies) {
  auto spec = default_spec(3, 0.0);
  auto spectrum = diagonalize(spec);
  const double expected[] = {0, 4, 4, 4, 8, 8, 8, 12};
  for (int j = 0; j < 8; ++j) EXPECT_NEAR(spectrum.energies[j], expected[j], 1e-13);
  EXPECT_TRUE(spectrum.degenerate);
}

TEST(Hamiltonian, SingleExcitationBandSplitting) {
  // 8x8 brute force puts the one-excitation band at 4 -+ 4 sqrt(2) eps with
  // the factor-2 ladder convention.
  auto spec = default_spec(3, 0.1);
  auto spectrum = diagonalize(spec);
  EXPECT_NEAR(spectrum.energies[1], 3.4343145750507620, 1e-12);
  EXPECT_NEAR(spectrum.energies[2], 4.0, 1e-12);
  EXPECT_NEAR(spectrum.energies[3], 4.5656854249492380, 1e-12);
}

TEST(Hamiltonian, TwoQubitMiddleBand) {
  auto spec = default_spec(2, 0.1);
  auto spectrum = diagonalize(spec);
  EXPECT_NEAR(spectrum.energies[1], 3.6, 1e-12);
  EXPECT_NEAR(spectrum.energies[2], 4.4, 1e-12);
}

TEST(Spectrum, SingleQubitIdentityEigenvectors) {
  auto spec = default_spec(1, 0.0);
  auto spectrum = diagonalize(spec);
  EXPECT_NEAR(spectrum.energies[0], 0.0, 1e-15);
  EXPECT_NEAR(spectrum.energies[1], 4.0, 1e-15);
  EXPECT_LT((spectrum.eigenvectors - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Spectrum, ExcitationLabels) {
  auto spectrum = diagonalize(default_spec(3, 0.1));
  const int expected[] = {0, 1, 1, 1, 2, 2, 2, 3};
  for (int j = 0; j < 8; ++j) EXPECT_EQ(spectrum.excitations[j], expected[j]);
  EXPECT_EQ(spectrum.band_index[1].size(), 3u);
  // total excitation sum: N 2^{N-1}
  int sum = 0;
  for (int n : spectrum.excitations) sum += n;
  EXPECT_EQ(sum, 3 * 4);
}

TEST(Spectrum, UnitaryAndReconstruction) {
  for (double eps : {0.0, 0.1}) {
    auto spec = default_spec(3, eps);
    auto triple = build_chain_hamiltonian(spec);
    auto spectrum = diagonalize(triple, spec);
    const Matrix& v = spectrum.eigenvectors;
    EXPECT_LT((v.adjoint() * v - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
    Matrix rebuilt = v * spectrum.energies.cast<cxd>().asDiagonal() * v.adjoint();
    const double scale = triple.h_total.cwiseAbs().maxCoeff();
    EXPECT_LT((rebuilt - triple.h_total).cwiseAbs().maxCoeff(), 1e-11 * scale);
  }
}

TEST(Spectrum, BandStructureForSmallCoupling) {
  auto spec = default_spec(3, 0.2);  // below h/(4N) = 1/3
  auto spectrum = diagonalize(spec);
  for (int j = 0; j < 8; ++j)
    EXPECT_LT(std::abs(spectrum.energies[j] - spectrum.excitations[j] * spec.h), spec.h / 2);
}

TEST(Spectrum, PhaseFixingIsDeterministic) {
  auto spec = default_spec(3, 0.1);
  auto a = diagonalize(spec);
  auto b = diagonalize(spec);
  EXPECT_EQ((a.eigenvectors - b.eigenvectors).cwiseAbs().maxCoeff(), 0.0);
  for (int j = 0; j < 8; ++j) {
    Eigen::Index imax;
    a.eigenvectors.col(j).cwiseAbs().maxCoeff(&imax);
    EXPECT_GT(a.eigenvectors(imax, j).real(), 0.0);
    EXPECT_NEAR(a.eigenvectors(imax, j).imag(), 0.0, 1e-14);
  }
}

TEST(Spectrum, RejectsExcitationMixingHamiltonians) {
  // a coupling that does not conserve the excitation number leaves the
  // number operator with non-integer expectation values
  ChainSpec spec = default_spec(2, 0.3);
  auto triple = build_chain_hamiltonian(spec);
  Matrix xx = embed_single(pauli::sx(), 1, 2) * embed_single(pauli::sx(), 2, 2);
  triple.h_total += 0.3 * xx;
  EXPECT_THROW(diagonalize(triple, spec), NonIntegerExcitation);
}

TEST(GibbsState, InfiniteTemperatureIsMaximallyMixed) {
  auto spectrum = diagonalize(default_spec(3, 0.1));
  auto rho = gibbs_state(spectrum, 1e-14);
  EXPECT_LT((rho.data - Matrix::Identity(8, 8) / 8.0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GibbsState, BandRatioAtEpsilonZero) {
  auto spectrum = diagonalize(default_spec(3, 0.0));
  auto rho = gibbs_state(spectrum, 0.1);
  double band1 = 0.0;
  for (int j : spectrum.band_index[1]) band1 += rho.data(j, j).real();
  const double ratio = band1 / rho.data(0, 0).real();
  EXPECT_NEAR(ratio, 2.0109601381069179, 1e-12);  // 3 e^{-0.4}
}

TEST(GibbsState, TwoLevelPopulations) {
  auto spectrum = diagonalize(default_spec(1, 0.0));
  auto rho = gibbs_state(spectrum, 0.1);
  EXPECT_NEAR(rho.data(0, 0).real(), 0.59868766011245200, 1e-14);
  EXPECT_NEAR(rho.data(1, 1).real(), 0.40131233988754800, 1e-14);
  rho.check();
}

TEST(GibbsState, CommutesWithHamiltonian) {
  auto spec = default_spec(3, 0.1);
  auto triple = build_chain_hamiltonian(spec);
  auto spectrum = diagonalize(triple, spec);
  auto rho = gibbs_state(spectrum, spec.beta);
  Matrix rho_local = to_local_basis(rho.data, spectrum);
  Matrix comm = rho_local * triple.h_total - triple.h_total * rho_local;
  EXPECT_LT(comm.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LocalThermalState, PopulationsAndNormalization) {
  auto spec = default_spec(3, 0.1);
  auto rho = local_thermal_state(spec);
  const double w = std::exp(-0.4);
  EXPECT_NEAR(rho.data(4, 4).real(), w / (1.0 + w), 1e-14);  // |100>
  EXPECT_NEAR(rho.data(0, 0).real(), 1.0 / (1.0 + w), 1e-14);
  EXPECT_NEAR(rho.data.trace().real(), 1.0, 1e-14);
  rho.check();

  spec.beta = 1e6;  // zero temperature limit
  auto cold = local_thermal_state(spec);
  EXPECT_NEAR(cold.data(0, 0).real(), 1.0, 1e-12);
}
