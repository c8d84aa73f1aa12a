// SPDX-License-Identifier: Apache-2.0
//
// hmimo: energy-efficient MIMO links assisted by nearly-passive metasurfaces
// Copyright (C) 2026 hmimo contributors
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

#ifndef HMIMO_LINALG_HPP
#define HMIMO_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hmimo/common.hpp"

namespace hmimo {

// Complex dense linear-algebra kernel shared by the channel synthesis, the
// closed-form solvers and the convex engines.  Decompositions are delegated to
// Eigen; this layer adds the deterministic conventions (eigenvalue ordering,
// eigenvector phase fixing, rank thresholds) every caller relies on.

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order and a deterministic phase convention per eigenvector.
struct HermitianEigen {
  VectorXd eigenvalues;    // descending
  MatrixXcd eigenvectors;  // column k pairs with eigenvalues[k]
};

namespace detail {

/// Relative asymmetry allowed before an input is rejected as non-Hermitian.
inline constexpr double kHermTol = 1e-9;

/// Rotate v by a global phase so its first component of largest modulus is
/// real and nonnegative.  Zero vectors are returned unchanged.
inline void fix_phase(Eigen::Ref<VectorXcd> v) {
  Eigen::Index pivot = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]);
    if (mag > best) {
      best = mag;
      pivot = i;
    }
  }
  if (best <= 0.0) return;
  const cxd rot = std::conj(v[pivot]) / best;
  v *= rot;
  v[pivot] = cxd(std::abs(v[pivot]), 0.0);  // scrub the rounding residue
}

inline void check_square(const MatrixXcd& x, const char* name) {
  if (x.rows() != x.cols()) {
    throw dimension_error(std::string(name) + " must be square, got " +
                          std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
  check_nonempty(x, name);
}

inline void check_hermitian(const MatrixXcd& x, const char* name) {
  check_square(x, name);
  check_finite(x, name);
  const double scale = x.norm();
  const double asym = (x - x.adjoint()).norm();
  if (asym > kHermTol * std::max(scale, 1e-300)) {
    throw dimension_error(std::string(name) + " is not Hermitian (relative asymmetry " +
                          std::to_string(asym / std::max(scale, 1e-300)) + ")");
  }
}

}  // namespace detail

/// Full eigendecomposition of a (numerically) Hermitian matrix.  The input may
/// carry an asymmetry of up to 1e-9 relative; it is symmetrized before the
/// solve so downstream identities hold exactly for the symmetrized operand.
inline HermitianEigen hermitian_eig(const MatrixXcd& x) {
  detail::check_hermitian(x, "hermitian_eig input");
  const MatrixXcd sym = 0.5 * (x + x.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(sym);
  if (es.info() != Eigen::Success) {
    throw not_psd_error("hermitian_eig: eigensolver failed to converge");
  }
  const Eigen::Index n = sym.rows();
  HermitianEigen out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  // Eigen orders ascending; flip to descending and pin the phase of each
  // column so repeated runs (and different BLAS paths) agree bit-for-bit.
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues[k] = es.eigenvalues()[n - 1 - k];
    out.eigenvectors.col(k) = es.eigenvectors().col(n - 1 - k);
    detail::fix_phase(out.eigenvectors.col(k));
  }
  return out;
}

/// Largest eigenvalue and matching unit eigenvector of a Hermitian PSD matrix.
/// Degenerate leading eigenvalues resolve to the first vector under the
/// deterministic ordering of hermitian_eig.
inline std::pair<double, VectorXcd> principal_eigpair(const MatrixXcd& x) {
  HermitianEigen eig = hermitian_eig(x);
  const double scale = x.norm();
  const double lambda_min = eig.eigenvalues[eig.eigenvalues.size() - 1];
  if (lambda_min < -1e-9 * std::max(scale, 1e-300)) {
    throw not_psd_error("principal_eigpair: input has eigenvalue " +
                        std::to_string(lambda_min) + " below the PSD tolerance");
  }
  return {eig.eigenvalues[0], eig.eigenvectors.col(0)};
}

/// Moore-Penrose left pseudo-inverse of a tall full-column-rank matrix,
/// computed through the SVD.  Singular values below 1e-10 of the largest are
/// treated as rank deficiency and rejected.
inline MatrixXcd left_pseudo_inverse(const MatrixXcd& c) {
  detail::check_nonempty(c, "left_pseudo_inverse input");
  detail::check_finite(c, "left_pseudo_inverse input");
  if (c.rows() < c.cols()) {
    throw dimension_error("left_pseudo_inverse: input has more columns (" +
                          std::to_string(c.cols()) + ") than rows (" +
                          std::to_string(c.rows()) + ")");
  }
  Eigen::JacobiSVD<MatrixXcd> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const double smax = s[0];
  const double smin = s[s.size() - 1];
  if (!(smin > 1e-10 * smax)) {
    throw conditioning_error(
        "left_pseudo_inverse: rank-deficient input (sigma_min=" + std::to_string(smin) +
            ", sigma_max=" + std::to_string(smax) + ")",
        smin, smax);
  }
  const MatrixXcd pinv = svd.matrixV() * s.cwiseInverse().asDiagonal() *
                         svd.matrixU().adjoint();
  // The defining identity of a left inverse; failure here means the SVD path
  // itself degraded, which callers cannot recover from silently.
  const double resid =
      (pinv * c - MatrixXcd::Identity(c.cols(), c.cols())).norm();
  if (!(resid <= 1e-8)) {
    throw conditioning_error(
        "left_pseudo_inverse: identity residual " + std::to_string(resid) +
            " exceeds tolerance",
        smin, smax);
  }
  return pinv;
}

/// log2 determinant of a Hermitian positive definite matrix via Cholesky.
/// `name` labels the operand in the error message on failure.
inline double logdet_psd(const MatrixXcd& x, const char* name = "matrix") {
  detail::check_hermitian(x, name);
  const MatrixXcd sym = 0.5 * (x + x.adjoint());
  Eigen::LLT<MatrixXcd> llt(sym);
  if (llt.info() != Eigen::Success) {
    throw not_psd_error(std::string("logdet_psd: ") + name +
                        " is not positive definite (Cholesky failed)");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sym.rows(); ++i) {
    acc += std::log2(llt.matrixLLT()(i, i).real());
  }
  return 2.0 * acc;
}

}  // namespace hmimo

#endif  // HMIMO_LINALG_HPP
