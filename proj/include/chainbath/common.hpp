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

#include <complex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace chainbath {

using cxd = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr cxd kI{0.0, 1.0};
inline constexpr double kHbar = 1.0;  // natural units throughout

// Named error conditions raised across the library.  All carry a message and
// derive from std::runtime_error so callers may catch broadly or by name.
#define CHAINBATH_ERROR(NAME)                                   \
  struct NAME : std::runtime_error {                            \
    explicit NAME(const std::string& what_arg)                  \
        : std::runtime_error(std::string(#NAME ": ") + what_arg) {} \
  }

CHAINBATH_ERROR(InvalidSpec);
CHAINBATH_ERROR(NonIntegerExcitation);
CHAINBATH_ERROR(NoOpenChannel);
CHAINBATH_ERROR(SingularKMatrix);
CHAINBATH_ERROR(LinearSolveFailure);
CHAINBATH_ERROR(ThresholdEnergy);
CHAINBATH_ERROR(InvalidMomentum);
CHAINBATH_ERROR(QuadratureNotConverged);
CHAINBATH_ERROR(BandOverlap);
CHAINBATH_ERROR(NotCompletelyPositive);
CHAINBATH_ERROR(WrongVariant);
CHAINBATH_ERROR(DimensionMismatch);
CHAINBATH_ERROR(IllConditionedSpectral);
CHAINBATH_ERROR(DegenerateSteadyState);
CHAINBATH_ERROR(DegenerateGap);
CHAINBATH_ERROR(NegativeRate);
CHAINBATH_ERROR(ParseError);
CHAINBATH_ERROR(ValidationError);
CHAINBATH_ERROR(UnknownFigure);
CHAINBATH_ERROR(IoError);

#undef CHAINBATH_ERROR

inline double hermiticity_defect(const Matrix& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

// 0.5 * sum of singular values of (a - b); the standard distance between states.
inline double trace_distance(const Matrix& a, const Matrix& b) {
  Matrix diff = a - b;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (diff + diff.adjoint()));
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double min_eigenvalue(const Matrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian);
  return es.eigenvalues().minCoeff();
}

// Column-major vectorization; vec(A rho B) = (B^T (x) A) vec(rho).
inline Vector vectorize(const Matrix& rho) {
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

inline Matrix unvectorize(const Vector& v, Eigen::Index d) {
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

// Static contiguous chunking so results do not depend on the worker count.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t lo = n * t / nt;
    const std::size_t hi = n * (t + 1) / nt;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace chainbath
