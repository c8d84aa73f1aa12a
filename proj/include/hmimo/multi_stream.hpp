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

#ifndef HMIMO_MULTI_STREAM_HPP
#define HMIMO_MULTI_STREAM_HPP

// General multi-stream solver for the doubly-assisted MIMO link.  Each
// reflection vector is optimized through a lifted determinant subproblem whose
// optimum is provably rank one, the transmit covariance through a Dinkelbach
// loop over determinant-maximization steps, and the three blocks alternate
// until the energy efficiency settles.  The two global reflected-power budgets
// are threaded through every block, so each block hands the next one a
// feasible starting point.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hmimo/channel.hpp"
#include "hmimo/common.hpp"
#include "hmimo/convex.hpp"
#include "hmimo/convex_types.hpp"
#include "hmimo/linalg.hpp"
#include "hmimo/power.hpp"
#include "hmimo/rng.hpp"

namespace hmimo {

// ---------------------------------------------------------------------------
// Lifted surface subproblem data
// ---------------------------------------------------------------------------

/// Data of one reflection-vector subproblem in lifted form: maximize
///
///   log2 det(I + sum_m weights[m]/sigma2 * maps[m] G maps[m]^H),  G = g g^H,
///
/// subject to the local reflected-power budget
///
///   Re tr(trace_matrix G) <= trace_bound
///
/// and, when `extra_trace_pair` is present (transmit surface only), to the
/// downstream budget expressed through the pair (E1, E2):
///
///   Re tr((E1 - E2) G) <= 0.
struct SurfaceSubproblem {
  VectorXd weights;             ///< kept eigenvalues, watts-scaled, descending
  std::vector<MatrixXcd> maps;  ///< one propagation map per kept eigenvalue
  MatrixXcd trace_matrix;       ///< diagonal PSD budget matrix
  double trace_bound = 0.0;     ///< incident power at the surface
  std::optional<std::pair<MatrixXcd, MatrixXcd>> extra_trace_pair;
  double sigma2 = 1.0;          ///< receiver noise power
  Eigen::Index dim = 0;         ///< number of surface elements
  Eigen::Index out_dim = 0;     ///< rows of each map (receive antennas)
};

/// Achievable rate (bits/s/Hz) of a subproblem at reflection vector `gamma`.
inline double surface_objective_bits(const SurfaceSubproblem& sp,
                                     const VectorXcd& gamma) {
  if (gamma.size() != sp.dim) {
    throw dimension_error("surface_objective_bits: gamma has " +
                          std::to_string(gamma.size()) + " entries, expected " +
                          std::to_string(sp.dim));
  }
  MatrixXcd w = MatrixXcd::Identity(sp.out_dim, sp.out_dim);
  for (std::size_t m = 0; m < sp.maps.size(); ++m) {
    const VectorXcd y = sp.maps[m] * gamma;
    w.noalias() += (sp.weights[static_cast<Eigen::Index>(m)] / sp.sigma2) * y *
                   y.adjoint();
  }
  return logdet_psd(0.5 * (w + w.adjoint()), "surface objective");
}

namespace detail {

/// Signed relative residual of the reflected-power budget at `gamma`.
inline double surface_trace_residual(const SurfaceSubproblem& sp,
                                     const VectorXcd& gamma) {
  const double quad = std::real(gamma.dot(sp.trace_matrix * gamma));
  const double scale =
      std::max({sp.trace_bound, sp.trace_matrix.norm() * gamma.squaredNorm(),
                1e-300});
  return (quad - sp.trace_bound) / scale;
}

/// Signed relative residual of the (scale-invariant) downstream budget.
inline double surface_pair_residual(const SurfaceSubproblem& sp,
                                    const VectorXcd& gamma) {
  if (!sp.extra_trace_pair) return 0.0;
  const MatrixXcd& e1 = sp.extra_trace_pair->first;
  const MatrixXcd& e2 = sp.extra_trace_pair->second;
  const double val =
      std::real(gamma.dot(e1 * gamma)) - std::real(gamma.dot(e2 * gamma));
  const double scale = std::max({e1.norm() + e2.norm(), 1e-300}) *
                       std::max(gamma.squaredNorm(), 1e-300);
  return val / scale;
}

/// Spectral truncation shared by both subproblem builders: keep the
/// eigenpairs carrying at least 1e-12 of the leading eigenvalue.  The incident
/// matrix inherits rank(Q), so almost all of the decomposition is discardable
/// noise.
inline void keep_leading_eigenpairs(const MatrixXcd& psd, VectorXd* values,
                                    MatrixXcd* vectors) {
  const HermitianEigen eig = hermitian_eig(0.5 * (psd + psd.adjoint()));
  const double lead =
      eig.eigenvalues.size() > 0 ? std::max(eig.eigenvalues[0], 0.0) : 0.0;
  const double floor = 1e-12 * lead;
  Eigen::Index kept = 0;
  while (kept < eig.eigenvalues.size() && eig.eigenvalues[kept] > floor &&
         eig.eigenvalues[kept] > 0.0) {
    ++kept;
  }
  *values = eig.eigenvalues.head(kept);
  *vectors = eig.eigenvectors.leftCols(kept);
}

/// Deterministic probe vectors for the reformulation-identity self-checks.
inline std::vector<VectorXcd> identity_probes(Eigen::Index dim) {
  std::vector<VectorXcd> probes;
  probes.push_back(VectorXcd::Ones(dim));
  RandomStream rs(7, "surface-identity-probe");
  probes.push_back(rs.complex_gaussian(dim, 1).col(0));
  return probes;
}

inline void check_identity(double direct, double decomposed, const char* what) {
  const double scale = std::max({std::abs(direct), std::abs(decomposed), 1e-300});
  if (std::abs(direct - decomposed) > 1e-9 * scale) {
    throw model_error(std::string("surface subproblem: ") + what +
                      " reformulation drifted by " +
                      std::to_string(std::abs(direct - decomposed) / scale) +
                      " relative");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subproblem builders
// ---------------------------------------------------------------------------

/// Receive-surface subproblem for fixed transmit surface and covariance.  The
/// incident matrix is B = C Gt H Q H^H Gt^H C^H; its eigen-decomposition turns
/// the rate into a weighted sum of rank-one terms and the reflected-power
/// budget into a diagonal quadratic form.  Both rewrites are verified on
/// probe vectors before the subproblem is released.
inline SurfaceSubproblem build_gamma_r_subproblem(const ChannelSet& ch,
                                                  const SurfaceState& gamma_t,
                                                  const MatrixXcd& q,
                                                  double sigma2) {
  detail::check_channel_surface_dims(ch, gamma_t,
                                     SurfaceState::all_ones(ch.C.rows()));
  detail::check_positive(sigma2, "noise power");
  const Eigen::Index n_t = ch.H.cols();
  if (q.rows() != n_t || q.cols() != n_t) {
    throw dimension_error("build_gamma_r_subproblem: covariance must be " +
                          std::to_string(n_t) + "x" + std::to_string(n_t));
  }

  const MatrixXcd z3 = ch.C * gamma_t.gamma.asDiagonal() * ch.H;
  const MatrixXcd b = z3 * q * z3.adjoint();

  SurfaceSubproblem sp;
  sp.dim = ch.C.rows();
  sp.out_dim = ch.G.rows();
  sp.sigma2 = sigma2;
  sp.trace_bound = std::max(0.0, b.trace().real());

  VectorXd values;
  MatrixXcd vectors;
  detail::keep_leading_eigenpairs(b, &values, &vectors);
  sp.weights = values;
  VectorXd diag = VectorXd::Zero(sp.dim);
  for (Eigen::Index m = 0; m < values.size(); ++m) {
    const VectorXcd u = vectors.col(m);
    sp.maps.push_back(ch.G * u.asDiagonal());
    diag += values[m] * u.cwiseAbs2();
  }
  sp.trace_matrix = diag.cast<cxd>().asDiagonal();

  // Self-check: the decomposed rate and budget agree with the direct forms.
  for (const VectorXcd& g : detail::identity_probes(sp.dim)) {
    const MatrixXcd gr = g.asDiagonal();
    const MatrixXcd direct_arg =
        MatrixXcd::Identity(sp.out_dim, sp.out_dim) +
        (ch.G * gr * b * gr.adjoint() * ch.G.adjoint()) / sigma2;
    detail::check_identity(logdet_psd(0.5 * (direct_arg + direct_arg.adjoint()),
                                      "receive-surface probe"),
                           surface_objective_bits(sp, g), "receive-surface rate");
    detail::check_identity((gr * b * gr.adjoint()).trace().real(),
                           std::real(g.dot(sp.trace_matrix * g)),
                           "receive-surface budget");
  }
  return sp;
}

/// Transmit-surface subproblem for fixed receive surface and covariance.  The
/// incident matrix is A = H Q H^H and the effective downstream map is
/// F = G Gr C.  Besides the local budget, the transmit surface also controls
/// the power arriving at the receive surface, which enters as the difference
/// pair (E1, E2).
inline SurfaceSubproblem build_gamma_t_subproblem(const ChannelSet& ch,
                                                  const SurfaceState& gamma_r,
                                                  const MatrixXcd& q,
                                                  double sigma2) {
  detail::check_channel_surface_dims(ch, SurfaceState::all_ones(ch.H.rows()),
                                     gamma_r);
  detail::check_positive(sigma2, "noise power");
  const Eigen::Index n_t = ch.H.cols();
  if (q.rows() != n_t || q.cols() != n_t) {
    throw dimension_error("build_gamma_t_subproblem: covariance must be " +
                          std::to_string(n_t) + "x" + std::to_string(n_t));
  }

  const MatrixXcd a = ch.H * q * ch.H.adjoint();
  const MatrixXcd z = gamma_r.gamma.asDiagonal() * ch.C;
  const MatrixXcd f = ch.G * z;

  SurfaceSubproblem sp;
  sp.dim = ch.H.rows();
  sp.out_dim = ch.G.rows();
  sp.sigma2 = sigma2;
  sp.trace_bound = std::max(0.0, a.trace().real());

  VectorXd values;
  MatrixXcd vectors;
  detail::keep_leading_eigenpairs(a, &values, &vectors);
  sp.weights = values;
  VectorXd diag = VectorXd::Zero(sp.dim);
  const MatrixXcd zhz = z.adjoint() * z;
  const MatrixXcd chc = ch.C.adjoint() * ch.C;
  MatrixXcd e1 = MatrixXcd::Zero(sp.dim, sp.dim);
  MatrixXcd e2 = MatrixXcd::Zero(sp.dim, sp.dim);
  for (Eigen::Index m = 0; m < values.size(); ++m) {
    const VectorXcd v = vectors.col(m);
    sp.maps.push_back(f * v.asDiagonal());
    diag += values[m] * v.cwiseAbs2();
    const MatrixXcd outer = v.conjugate() * v.transpose();
    e1 += values[m] * zhz.cwiseProduct(outer);
    e2 += values[m] * chc.cwiseProduct(outer);
  }
  sp.trace_matrix = diag.cast<cxd>().asDiagonal();
  sp.extra_trace_pair = {0.5 * (e1 + e1.adjoint()), 0.5 * (e2 + e2.adjoint())};

  // Self-check: rate, local budget and both sides of the downstream budget
  // agree with their direct forms.
  for (const VectorXcd& g : detail::identity_probes(sp.dim)) {
    const MatrixXcd gt = g.asDiagonal();
    const MatrixXcd direct_arg =
        MatrixXcd::Identity(sp.out_dim, sp.out_dim) +
        (f * gt * a * gt.adjoint() * f.adjoint()) / sigma2;
    detail::check_identity(logdet_psd(0.5 * (direct_arg + direct_arg.adjoint()),
                                      "transmit-surface probe"),
                           surface_objective_bits(sp, g),
                           "transmit-surface rate");
    detail::check_identity((gt * a * gt.adjoint()).trace().real(),
                           std::real(g.dot(sp.trace_matrix * g)),
                           "transmit-surface budget");
    detail::check_identity((z * gt * a * gt.adjoint() * z.adjoint()).trace().real(),
                           std::real(g.dot(sp.extra_trace_pair->first * g)),
                           "downstream reflected power");
    detail::check_identity(
        (ch.C * gt * a * gt.adjoint() * ch.C.adjoint()).trace().real(),
        std::real(g.dot(sp.extra_trace_pair->second * g)),
        "downstream incident power");
  }
  return sp;
}

// ---------------------------------------------------------------------------
// Surface optimization (lifted rank-one steps)
// ---------------------------------------------------------------------------

namespace detail {

struct SurfaceOptimum {
  VectorXcd gamma;
  MatrixXcd lifted;  ///< lifted representation of the returned surface
  double objective_bits = 0.0;
  double rank_ratio = 0.0;  ///< certified lambda_2 / lambda_1 spread
  SolveReport report;
};

/// Wirtinger gradient of the rate at `g`: df = 2 Re{grad^H dg}.
inline VectorXcd surface_gradient(const SurfaceSubproblem& sp,
                                  const VectorXcd& g) {
  MatrixXcd w = MatrixXcd::Identity(sp.out_dim, sp.out_dim);
  std::vector<VectorXcd> images(sp.maps.size());
  for (std::size_t m = 0; m < sp.maps.size(); ++m) {
    images[m] = sp.maps[m] * g;
    w.noalias() += (sp.weights[static_cast<Eigen::Index>(m)] / sp.sigma2) *
                   images[m] * images[m].adjoint();
  }
  const MatrixXcd winv = w.inverse();
  VectorXcd grad = VectorXcd::Zero(sp.dim);
  for (std::size_t m = 0; m < sp.maps.size(); ++m) {
    grad.noalias() += (sp.weights[static_cast<Eigen::Index>(m)] / sp.sigma2) *
                      (sp.maps[m].adjoint() * (winv * images[m]));
  }
  return grad / std::log(2.0);
}

/// Aligns a recovered candidate with the anchor's phase (the rate is global
/// phase invariant) and projects it onto the local budget boundary (the rate
/// is monotone under scaling and both budgets are degree-2 homogeneous).
inline VectorXcd project_surface_candidate(const SurfaceSubproblem& sp,
                                           const VectorXcd& anchor,
                                           VectorXcd cand) {
  const cxd align = anchor.dot(cand);
  if (std::abs(align) > 0.0) cand *= std::polar(1.0, -std::arg(align));
  const double quad = std::real(cand.dot(sp.trace_matrix * cand));
  if (quad > 0.0 && sp.trace_bound > 0.0) {
    cand *= std::sqrt(sp.trace_bound / quad);
  }
  return cand;
}

/// Refines an extracted rank-one candidate by monotone ascent of the true
/// rate along the local-budget boundary (the optimum is always budget-tight
/// because the rate is monotone under scaling).  Each step projects the
/// gradient onto the tangent of the active budgets under the real inner
/// product, retracts back onto the boundary, and backtracks until the rate
/// improves; the downstream pair normal participates only while it blocks
/// the ascent.  Every iterate stays budget-tight and pair-feasible, so the
/// caller's acceptance monotonicity is untouched.
inline VectorXcd refine_surface_candidate(const SurfaceSubproblem& sp,
                                          VectorXcd g) {
  if (sp.weights.size() == 0 || sp.trace_bound <= 0.0 || sp.dim < 2) return g;
  double obj = surface_objective_bits(sp, g);
  if (!std::isfinite(obj)) return g;
  double theta = 0.5;
  for (int it = 0; it < 300; ++it) {
    const VectorXcd grad = surface_gradient(sp, g);
    const VectorXcd n0 = sp.trace_matrix * g;
    VectorXcd d;
    const auto project_out = [&](const std::vector<const VectorXcd*>& ns) {
      const int k = static_cast<int>(ns.size());
      Eigen::MatrixXd gram(k, k);
      Eigen::VectorXd rhs(k);
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) gram(i, j) = ns[i]->dot(*ns[j]).real();
        rhs[i] = ns[i]->dot(grad).real();
      }
      const Eigen::VectorXd mu = gram.ldlt().solve(rhs);
      d = grad;
      for (int i = 0; i < k; ++i) d -= mu[i] * (*ns[i]);
      return mu;
    };
    if (sp.extra_trace_pair && surface_pair_residual(sp, g) >= -1e-8) {
      const VectorXcd n1 =
          (sp.extra_trace_pair->first - sp.extra_trace_pair->second) * g;
      const Eigen::VectorXd mu = project_out({&n0, &n1});
      // A negative pair multiplier means the ascent leaves that boundary
      // into the feasible side on its own; only the budget stays projected.
      if (mu.size() == 2 && mu[1] < 0.0) project_out({&n0});
    } else {
      project_out({&n0});
    }
    const double dnorm = d.norm();
    if (!(dnorm > 0.0) || !d.allFinite()) break;
    const VectorXcd u = d / dnorm;
    const double reach = std::max(g.norm(), 1e-300);
    bool moved = false;
    for (; theta >= 1e-12; theta *= 0.5) {
      VectorXcd trial = g + (theta * reach) * u;
      const double quad = std::real(trial.dot(sp.trace_matrix * trial));
      if (!(quad > 0.0)) continue;
      trial *= std::sqrt(sp.trace_bound / quad);
      if (surface_pair_residual(sp, trial) > 1e-8) continue;
      const double trial_obj = surface_objective_bits(sp, trial);
      if (trial_obj > obj) {
        g = std::move(trial);
        obj = trial_obj;
        moved = true;
        theta = std::min(1.0, 2.0 * theta);
        break;
      }
    }
    if (!moved) break;
  }
  return g;
}

/// Relative stationarity residual of the true problem at `g`: the gradient
/// after removing its best nonnegative combination of active-constraint
/// normals, measured against the gradient magnitude.  Unlike any quantity of
/// the penalized surrogate, this certificate does not depend on the penalty
/// weight.
inline double surface_kkt_residual(const SurfaceSubproblem& sp,
                                   const VectorXcd& g, const VectorXcd& grad) {
  std::vector<VectorXcd> normals;
  if (surface_trace_residual(sp, g) >= -1e-6) normals.push_back(sp.trace_matrix * g);
  if (sp.extra_trace_pair && surface_pair_residual(sp, g) >= -1e-6) {
    normals.push_back((sp.extra_trace_pair->first -
                       sp.extra_trace_pair->second) *
                      g);
  }
  double best = grad.norm();
  const auto residual_with = [&](const std::vector<int>& subset) {
    const int k = static_cast<int>(subset.size());
    Eigen::MatrixXd m(k, k);
    Eigen::VectorXd rhs(k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        m(i, j) = normals[subset[i]].dot(normals[subset[j]]).real();
      }
      rhs[i] = normals[subset[i]].dot(grad).real();
    }
    const Eigen::VectorXd mu = m.ldlt().solve(rhs);
    if ((mu.array() < 0.0).any()) return;
    VectorXcd res = grad;
    for (int i = 0; i < k; ++i) res -= mu[i] * normals[subset[i]];
    best = std::min(best, res.norm());
  };
  const int n = static_cast<int>(normals.size());
  for (int i = 0; i < n; ++i) residual_with({i});
  if (n == 2) residual_with({0, 1});
  // Scale floor: a vanishing gradient is stationary regardless of direction.
  double gscale = 0.0;
  for (std::size_t m = 0; m < sp.maps.size(); ++m) {
    gscale += (sp.weights[static_cast<Eigen::Index>(m)] / sp.sigma2) *
              sp.maps[m].squaredNorm();
  }
  gscale *= std::max(g.norm(), 1.0) / std::log(2.0);
  return best / std::max(grad.norm(), 1e-9 * std::max(gscale, 1e-300));
}

/// Shared engine behind both surface updates.  Each step solves the lifted
/// determinant problem with the movement bound around the current anchor
/// applied as a penalty (the bound taken literally admits only the anchor
/// itself), recovers the principal rank-one component, and accepts it only if
/// the true rate does not decrease.  Rejections and residual lifted rank both
/// tighten the penalty, so the accepted iterates stay monotone and collapse
/// to rank one.
inline SurfaceOptimum optimize_surface(const SurfaceSubproblem& sp,
                                       const VectorXcd& gamma0,
                                       const SolverOptions& opts,
                                       const std::string& label) {
  if (gamma0.size() != sp.dim) {
    throw dimension_error(label + ": starting surface has " +
                          std::to_string(gamma0.size()) +
                          " coefficients, expected " + std::to_string(sp.dim));
  }
  check_finite(gamma0, "starting surface");
  if (static_cast<Eigen::Index>(sp.maps.size()) != sp.weights.size()) {
    throw dimension_error(label + ": weights/maps length mismatch");
  }

  SurfaceOptimum out;
  out.gamma = gamma0;
  out.lifted = gamma0 * gamma0.adjoint();

  // Nothing reaches the surface (zero covariance upstream): any reflection
  // vector is optimal, keep the starting one.
  if (sp.weights.size() == 0) {
    out.report.objective_trace.push_back(0.0);
    out.report.constraint_residuals = {0.0, 0.0};
    return out;
  }

  if (surface_trace_residual(sp, gamma0) > 1e-6 ||
      surface_pair_residual(sp, gamma0) > 1e-6) {
    throw model_error(label + ": starting surface violates a power budget");
  }

  double obj = surface_objective_bits(sp, gamma0);
  out.objective_bits = obj;
  out.report.objective_trace.push_back(obj);

  // One element: the rate grows with |gamma| and the budget pins it at the
  // full-reflection magnitude; the phase is free, keep the anchor's.
  if (sp.dim == 1) {
    const double d = std::real(sp.trace_matrix(0, 0));
    if (d > 0.0) {
      const double radius = std::sqrt(sp.trace_bound / d);
      const cxd g0 = gamma0(0);
      VectorXcd cand(1);
      cand(0) = std::abs(g0) > 0.0 ? radius * g0 / std::abs(g0) : cxd(radius, 0.0);
      if (surface_pair_residual(sp, cand) <= 1e-8) {
        out.gamma = cand;
        out.lifted = cand * cand.adjoint();
        out.objective_bits = surface_objective_bits(sp, cand);
        out.report.objective_trace.push_back(out.objective_bits);
      }
    }
    out.report.constraint_residuals = {surface_trace_residual(sp, out.gamma),
                                       surface_pair_residual(sp, out.gamma)};
    return out;
  }

  MaxDetProblem pb;
  pb.dim = static_cast<int>(sp.dim);
  pb.noise = sp.sigma2;
  for (Eigen::Index m = 0; m < sp.weights.size(); ++m) {
    pb.terms.push_back({sp.weights[m], sp.maps[static_cast<std::size_t>(m)]});
  }
  pb.trace_constraints.push_back({sp.trace_matrix, sp.trace_bound, 0.0});
  if (sp.extra_trace_pair) {
    const MatrixXcd diff =
        sp.extra_trace_pair->first - sp.extra_trace_pair->second;
    const double pair_scale = std::max(sp.extra_trace_pair->first.norm() +
                                           sp.extra_trace_pair->second.norm(),
                                       1e-300);
    // A vanishing difference means the surface is power-neutral downstream
    // for every reflection vector; the lifted row would then have no strict
    // interior, so drop it within the feasibility budget.
    if (diff.norm() > 1e-8 * pair_scale) {
      pb.trace_constraints.push_back(
          {0.5 * (diff + diff.adjoint()), 0.0, pair_scale});
    }
  }

  // Initial penalty weight: a small fraction of the true gradient magnitude
  // over the iterate scale, so the proximal pull never drowns the
  // objective's first-order signal at the anchor.
  const double grad0 = surface_gradient(sp, gamma0).norm();
  const double rho_floor =
      std::max(1e-12, 1e-8 * grad0 / std::max(gamma0.norm(), 1.0));
  double rho = std::max(rho_floor,
                        1e-2 * grad0 / std::max(gamma0.norm(), 1.0));
  const double rho_cap = std::max(1e14, 1e12 * rho);

  VectorXcd anchor = gamma0;
  bool stationary =
      surface_kkt_residual(sp, anchor, surface_gradient(sp, anchor)) <= 1e-6;
  MatrixXcd x_warm = out.lifted;
  int rejections_in_row = 0;
  int tiny_gains_in_row = 0;
  bool converged = stationary;  // a stationary start needs no steps
  const auto t_start = std::chrono::steady_clock::now();
  const auto out_of_time = [&]() {
    return opts.time_cap_s > 0.0 &&
           std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
                   .count() > opts.time_cap_s;
  };
  int iter = 0;
  for (; iter < opts.max_iters && !converged && !out_of_time(); ++iter) {
    pb.link = LmiLink{anchor, rho};
    MaxDetSolution sol;
    try {
      sol = solve_maxdet(pb, &x_warm, &anchor, opts);
    } catch (const solver_error&) {
      rho *= 10.0;
      if (rho > rho_cap) break;
      continue;
    }

    const HermitianEigen eig = hermitian_eig(0.5 * (sol.x + sol.x.adjoint()));
    const double l1 = std::max(eig.eigenvalues[0], 0.0);
    const double l2 =
        eig.eigenvalues.size() > 1 ? std::max(eig.eigenvalues[1], 0.0) : 0.0;
    const double ratio = l1 > 0.0 ? l2 / l1 : 0.0;
    // Every solve is anchored at the surface we currently hold, so its
    // spread is the honest lifting diagnostic for that iterate, whether or
    // not the recovered candidate is accepted.
    out.rank_ratio = ratio;

    // Candidate pool: the principal eigenpair, plus Gaussian draws from the
    // lifted iterate when it has spread (the standard randomized extraction
    // for semidefinite relaxations); every candidate is phase-aligned and
    // projected onto the budget boundary before scoring.
    VectorXcd cand = project_surface_candidate(
        sp, anchor, std::sqrt(l1) * eig.eigenvectors.col(0));
    double cand_obj = surface_pair_residual(sp, cand) <= 1e-8
                          ? surface_objective_bits(sp, cand)
                          : -std::numeric_limits<double>::infinity();
    if (ratio > 1e-8) {
      Eigen::Index kept = 0;
      while (kept < eig.eigenvalues.size() &&
             eig.eigenvalues[kept] > 1e-12 * l1) {
        ++kept;
      }
      const MatrixXcd x_half =
          eig.eigenvectors.leftCols(kept) *
          eig.eigenvalues.head(kept).cwiseSqrt().asDiagonal();
      RandomStream draws(17, "surface-randomization",
                         static_cast<std::uint64_t>(iter));
      for (int d = 0; d < 6; ++d) {
        const VectorXcd trial = project_surface_candidate(
            sp, anchor, x_half * draws.complex_gaussian(kept, 1).col(0));
        if (surface_pair_residual(sp, trial) > 1e-8) continue;
        const double trial_obj = surface_objective_bits(sp, trial);
        if (trial_obj > cand_obj) {
          cand = trial;
          cand_obj = trial_obj;
        }
      }
    }
    if (std::isfinite(cand_obj)) {
      cand = refine_surface_candidate(sp, std::move(cand));
      cand_obj = surface_objective_bits(sp, cand);
    }
    if (cand_obj >= obj) {
      const double gain = cand_obj - obj;
      anchor = cand;
      obj = cand_obj;
      x_warm = 0.5 * (sol.x + sol.x.adjoint());
      out.gamma = anchor;
      out.lifted = x_warm;
      out.objective_bits = obj;
      out.report.objective_trace.push_back(obj);
      rejections_in_row = 0;
      const double kkt =
          surface_kkt_residual(sp, anchor, surface_gradient(sp, anchor));
      stationary = kkt <= 1e-6;
#ifdef HMIMO_SURFACE_DEBUG
      std::printf("  [%s it %3d] accept gain=%.3e rho=%.3e kkt=%.3e ratio=%.1e\n",
                  label.c_str(), iter, gain, rho, kkt, ratio);
#endif
      if (stationary) {
        converged = true;
      } else {
        // Trust-region handshake: success relaxes the proximal pull so the
        // next step is not clamped to a geometric crawl toward the local
        // optimum; rejections below tighten it back.
        rho = std::max(rho_floor, 0.25 * rho);
        // Consecutive vanishing gains mean the objective is flat to within
        // every downstream tolerance even though the directional certificate
        // has not closed; stop polishing.
        tiny_gains_in_row =
            gain <= 1e-10 * std::max(1.0, std::abs(obj)) ? tiny_gains_in_row + 1
                                                         : 0;
        if (tiny_gains_in_row >= 3) converged = true;
      }
    } else {
#ifdef HMIMO_SURFACE_DEBUG
      std::printf("  [%s it %3d] reject drop=%.3e rho=%.3e ratio=%.1e\n",
                  label.c_str(), iter, obj - cand_obj, rho, ratio);
#endif
      rho *= 10.0;
      if (++rejections_in_row > 60 || rho > rho_cap) break;
    }
  }

  // Certification phase: freeze the surface, pin the penalized subproblem
  // onto it, and measure how far the pinned lifted iterate spreads beyond
  // rank one.  A fixed point admits a rank-one lifted optimum, so a pinned
  // solve that keeps spreading means the rank-one guarantee genuinely broke
  // down.  The ladder stays at moderate penalties: far larger ones exceed
  // what the floating-point barrier can resolve and return junk iterates.
  const double h_scale = std::max(1.0, out.gamma.squaredNorm());
  // Pinned solves are warm-started at the returned surface's own outer
  // product: the pinned optimum is within O(1/rho) of exactly that point, so
  // the blend ladder starts each rung a hair from its solution.  The surface
  // itself satisfies the downstream pair only up to the module-wide boundary
  // slack, so the certified problem opens that row by the same slack; without
  // it, a boundary-tight iterate would have no strictly feasible warm blend.
  const MatrixXcd x_cert = out.gamma * out.gamma.adjoint();
  MaxDetProblem pb_cert = pb;
  for (auto& tc : pb_cert.trace_constraints) {
    if (tc.bound == 0.0 && tc.scale > 0.0) tc.bound = 1e-7 * tc.scale;
  }
  for (double rho_c : {1e2, 1e3, 1e4, 1e5, 1e6, 1e8}) {
    pb_cert.link = LmiLink{out.gamma, rho_c};
    try {
      MaxDetSolution sol = solve_maxdet(pb_cert, &x_cert, &out.gamma, opts);
      if (sol.report.termination != Termination::Converged) {
        // Second chance from the interior lifted iterate: the outer-product
        // start can be a sliver from the cone boundary and stall Newton.
        sol = solve_maxdet(pb_cert, &x_warm, &out.gamma, opts);
      }
#ifdef HMIMO_SURFACE_DEBUG
      std::printf("  [%s cert rho=%.0e] term=%d pen_res=%.3e\n", label.c_str(),
                  rho_c, static_cast<int>(sol.report.termination),
                  sol.penalty_residual);
#endif
      if (sol.report.termination != Termination::Converged) continue;
      if (sol.penalty_residual > 1e-4 * h_scale) continue;  // not pinned yet
      const HermitianEigen eig =
          hermitian_eig(0.5 * (sol.x + sol.x.adjoint()));
      const double l1 = std::max(eig.eigenvalues[0], 0.0);
      const double l2 =
          eig.eigenvalues.size() > 1 ? std::max(eig.eigenvalues[1], 0.0) : 0.0;
      out.rank_ratio = std::min(out.rank_ratio, l1 > 0.0 ? l2 / l1 : 0.0);
      if (out.rank_ratio <= 1e-6) break;
    } catch (const solver_error&) {
      continue;
    }
  }
  // The exposed lifted iterate is the returned surface's own outer product:
  // budget-tight, pair-feasible, and exactly rank one, so it is a feasible
  // point of the lifted subproblem in its own right.
  out.lifted = out.gamma * out.gamma.adjoint();

  out.report.iterations = iter;
  out.report.termination =
      converged ? Termination::Converged : Termination::MaxIters;
  out.report.certificate = out.rank_ratio;
  out.report.constraint_residuals = {surface_trace_residual(sp, out.gamma),
                                     surface_pair_residual(sp, out.gamma)};
  if (out.rank_ratio > 1e-4) {
    throw solver_error(label + ": lifted iterate kept rank ratio " +
                       std::to_string(out.rank_ratio) +
                       ", the rank-one guarantee failed");
  }
  return out;
}

}  // namespace detail

/// Optimizes the receive-surface reflection vector on a built subproblem.
/// The optional `lifted` output receives the lifted representation of the
/// returned surface; `rank_ratio` receives the certified spread of the
/// pinned lifted iterate (second over first eigenvalue).
inline std::pair<SurfaceState, SolveReport> optimize_gamma_r(
    const SurfaceSubproblem& sp, const VectorXcd& gamma0,
    const SolverOptions& opts = {}, MatrixXcd* lifted = nullptr,
    double* rank_ratio = nullptr) {
  detail::SurfaceOptimum best =
      detail::optimize_surface(sp, gamma0, opts, "optimize_gamma_r");
  if (lifted != nullptr) *lifted = best.lifted;
  if (rank_ratio != nullptr) *rank_ratio = best.rank_ratio;
  return {SurfaceState(std::move(best.gamma)), std::move(best.report)};
}

/// Builds the transmit-surface subproblem at the given receive surface and
/// covariance, then optimizes the transmit reflection vector.
inline std::pair<SurfaceState, SolveReport> optimize_gamma_t(
    const ChannelSet& ch, const SurfaceState& gamma_r, const MatrixXcd& q,
    const VectorXcd& gamma0, const SolverOptions& opts = {},
    MatrixXcd* lifted = nullptr, double* rank_ratio = nullptr) {
  const SurfaceSubproblem sp =
      build_gamma_t_subproblem(ch, gamma_r, q, ch.sigma2);
  detail::SurfaceOptimum best =
      detail::optimize_surface(sp, gamma0, opts, "optimize_gamma_t");
  if (lifted != nullptr) *lifted = best.lifted;
  if (rank_ratio != nullptr) *rank_ratio = best.rank_ratio;
  return {SurfaceState(std::move(best.gamma)), std::move(best.report)};
}

// ---------------------------------------------------------------------------
// Covariance step
// ---------------------------------------------------------------------------

/// Optimizes the transmit covariance at fixed surfaces: a determinant
/// maximization over Q >= 0 under the radiated-power cap and both
/// reflected-power budgets (all linear in Q).  Capacity mode is one solve;
/// energy-efficiency mode wraps it in a Dinkelbach loop whose shifted
/// objective subtracts the radiated-power cost.
inline std::pair<MatrixXcd, SolveReport> optimize_Q(
    const ChannelSet& ch, const SurfaceState& gamma_t,
    const SurfaceState& gamma_r, const PowerModel& pm, double p_max,
    OptimizeMode mode = OptimizeMode::EnergyEfficiency,
    double bandwidth_hz = 1.0, const SolverOptions& opts = {},
    const MatrixXcd* q_warm = nullptr) {
  detail::check_channel_surface_dims(ch, gamma_t, gamma_r);
  detail::check_positive(bandwidth_hz, "bandwidth");
  detail::check_nonnegative(p_max, "power budget");
  const Eigen::Index n_t = ch.H.cols();
  const Eigen::Index n_r = ch.G.rows();
  const double p_static =
      static_power(pm, n_t, n_r, ch.H.rows(), ch.G.cols());
  detail::check_positive(p_static, "static power");

  const MatrixXcd z4 = gamma_t.gamma.asDiagonal() * ch.H;
  const MatrixXcd z3 = ch.C * z4;
  const MatrixXcd z2 = gamma_r.gamma.asDiagonal() * z3;
  const MatrixXcd composite = ch.G * z2;

  SolveReport rep;
  // Dead link or no budget: zero covariance is optimal in both modes.
  if (composite.norm() == 0.0 || p_max == 0.0) {
    rep.objective_trace.push_back(0.0);
    rep.termination = Termination::Converged;
    return {MatrixXcd::Zero(n_t, n_t), rep};
  }

  MaxDetProblem pb;
  pb.dim = static_cast<int>(n_t);
  pb.noise = ch.sigma2;
  pb.terms.push_back({1.0, composite});
  const MatrixXcd hh = ch.H.adjoint() * ch.H;
  const MatrixXcd z3h = z3.adjoint() * z3;
  const MatrixXcd d_tx = z4.adjoint() * z4 - hh;
  const MatrixXcd d_rx = z2.adjoint() * z2 - z3h;
  // A reflection row whose coefficient nearly vanishes holds for every
  // covariance within the relative feasibility budget, but a tiny positive
  // remnant would leave the zero-bound inequality with no strict interior.
  if (d_tx.norm() > 1e-8 * hh.norm()) {
    pb.trace_constraints.push_back(
        {0.5 * (d_tx + d_tx.adjoint()), 0.0, std::max(hh.norm(), 1e-300)});
  }
  if (d_rx.norm() > 1e-8 * z3h.norm()) {
    pb.trace_constraints.push_back(
        {0.5 * (d_rx + d_rx.adjoint()), 0.0, std::max(z3h.norm(), 1e-300)});
  }
  pb.trace_constraints.push_back(
      {MatrixXcd::Identity(n_t, n_t), p_max, 0.0});

  const MatrixXcd q0 = (q_warm != nullptr && q_warm->rows() == n_t &&
                        q_warm->trace().real() > 0.0)
                           ? *q_warm
                           : MatrixXcd((p_max / static_cast<double>(n_t)) *
                                       MatrixXcd::Identity(n_t, n_t));

  if (mode == OptimizeMode::Capacity) {
    const MaxDetSolution sol = solve_maxdet(pb, &q0, nullptr, opts);
    rep = sol.report;
    rep.objective_trace = {bandwidth_hz * sol.objective_bits};
    return {sol.x, rep};
  }

  FractionalProblem<MatrixXcd> fp;
  fp.numerator = [&](const MatrixXcd& q) {
    return bandwidth_hz * maxdet_objective_bits(pb, q);
  };
  fp.denominator = [&](const MatrixXcd& q) {
    return pm.mu * std::max(q.trace().real(), 0.0) + p_static;
  };
  fp.maximize_shifted = [&](double eta, const MatrixXcd& warm,
                            SolveReport* inner) {
    MaxDetProblem shifted = pb;
    shifted.linear = MatrixXcd(-(eta * pm.mu / bandwidth_hz) *
                               MatrixXcd::Identity(n_t, n_t));
    const MaxDetSolution sol = solve_maxdet(shifted, &warm, nullptr, opts);
    if (inner != nullptr) *inner = sol.report;
    return sol.x;
  };
  auto [q, din_rep] = dinkelbach(fp, q0, opts);
  return {std::move(q), std::move(din_rep)};
}

// ---------------------------------------------------------------------------
// Alternating outer loop
// ---------------------------------------------------------------------------

struct MultiStreamSolution {
  SurfaceState gamma_t;
  SurfaceState gamma_r;
  MatrixXcd q;
  double capacity_bps = 0.0;
  double total_power_w = 0.0;
  double ee_bits_per_joule = 0.0;
  double rank_ratio_t = 0.0;  ///< lifted-gap diagnostic of the last Gt step
  double rank_ratio_r = 0.0;  ///< lifted-gap diagnostic of the last Gr step
  SolveReport report;
};

/// Alternating maximization over the receive surface, the transmit surface
/// and the covariance, from the all-ones surfaces and the isotropic
/// full-power covariance.  Every block keeps both power budgets satisfied, so
/// the objective trace is nondecreasing and each block starts feasible.
inline MultiStreamSolution alternate_multi_stream(
    const ChannelSet& ch, const PowerModel& pm, double p_max,
    OptimizeMode mode = OptimizeMode::EnergyEfficiency,
    double bandwidth_hz = 1.0, const SolverOptions& opts = {}) {
  detail::check_positive(p_max, "power budget");
  detail::check_positive(bandwidth_hz, "bandwidth");
  const Eigen::Index n_t = ch.H.cols();

  MultiStreamSolution sol;
  sol.gamma_t = SurfaceState::all_ones(ch.H.rows());
  sol.gamma_r = SurfaceState::all_ones(ch.C.rows());
  sol.q = (p_max / static_cast<double>(n_t)) *
          MatrixXcd::Identity(n_t, n_t);
  detail::check_channel_surface_dims(ch, sol.gamma_t, sol.gamma_r);

  const auto evaluate = [&]() {
    const double cap = capacity(ch, sol.gamma_t, sol.gamma_r,
                                TransmitState::covariance(sol.q), bandwidth_hz);
    const double pow_w = total_power(pm, ch, TransmitState::covariance(sol.q));
    return mode == OptimizeMode::Capacity ? cap
                                          : energy_efficiency(cap, pow_w);
  };

  double obj = evaluate();
  sol.report.objective_trace.push_back(obj);
  sol.report.termination = Termination::MaxIters;

  // The blocks can jam where the transmit step is blocked by the downstream
  // budget linearized at the incumbent receive surface even though a
  // coordinated move of both surfaces would still gain.  When the cycle
  // settles, probe once: relax that row for one transmit step, then rebuild
  // and re-solve the receive surface under the budget the probe implies.
  // The rebuilt budget row is exactly the outer feasibility constraint, so
  // the probe endpoint is feasible by construction; adopt it only if the
  // objective genuinely improves.
  int escapes_left = 8;
  const auto try_escape = [&]() -> bool {
    if (escapes_left <= 0) return false;
    --escapes_left;

    // Finish a probe transmit surface: rebuild the receive subproblem under
    // the budget it implies, re-solve the receive surface from a scaled-down
    // incumbent, re-optimize the covariance, and score the configuration.
    struct Probe {
      SurfaceState gt{VectorXcd()};
      SurfaceState gr{VectorXcd()};
      MatrixXcd q;
      double obj = -std::numeric_limits<double>::infinity();
      double ratio_t = 0.0, ratio_r = 0.0, certificate = 0.0;
    };
    const auto finish_probe = [&](VectorXcd gt_cand,
                                  double ratio_t) -> Probe {
      Probe p;
      try {
        const SurfaceState gt_probe(std::move(gt_cand));
        const SurfaceSubproblem sp_rebuilt =
            build_gamma_r_subproblem(ch, gt_probe, sol.q, ch.sigma2);
        VectorXcd gr_start = sol.gamma_r.gamma;
        const double quad =
            std::real(gr_start.dot(sp_rebuilt.trace_matrix * gr_start));
        if (quad > sp_rebuilt.trace_bound && quad > 0.0) {
          gr_start *= std::sqrt(std::max(sp_rebuilt.trace_bound, 0.0) / quad);
        }
        detail::SurfaceOptimum probe_r = detail::optimize_surface(
            sp_rebuilt, gr_start, opts, "escape probe (receive)");
        const SurfaceState gr_probe(std::move(probe_r.gamma));
        auto [q_probe, rep_probe] =
            optimize_Q(ch, gt_probe, gr_probe, pm, p_max, mode, bandwidth_hz,
                       opts, &sol.q);
        const double cap_probe = capacity(ch, gt_probe, gr_probe,
                                          TransmitState::covariance(q_probe),
                                          bandwidth_hz);
        const double pow_probe =
            total_power(pm, ch, TransmitState::covariance(q_probe));
        p.obj = mode == OptimizeMode::Capacity
                    ? cap_probe
                    : energy_efficiency(cap_probe, pow_probe);
        p.gt = gt_probe;
        p.gr = gr_probe;
        p.q = std::move(q_probe);
        p.ratio_t = ratio_t;
        p.ratio_r = probe_r.rank_ratio;
        p.certificate = rep_probe.certificate;
      } catch (const solver_error&) {
      } catch (const model_error&) {
      }
      return p;
    };

    Probe best;
    const SurfaceSubproblem sp_t =
        build_gamma_t_subproblem(ch, sol.gamma_r, sol.q, ch.sigma2);

    // Probe A: rate-greedy transmit step with the downstream row relaxed.
    try {
      SurfaceSubproblem sp_free = sp_t;
      sp_free.extra_trace_pair.reset();
      detail::SurfaceOptimum probe_t = detail::optimize_surface(
          sp_free, sol.gamma_t.gamma, opts, "escape probe (transmit)");
      Probe a = finish_probe(std::move(probe_t.gamma), probe_t.rank_ratio);
      if (a.obj > best.obj) best = std::move(a);
    } catch (const solver_error&) {
    } catch (const model_error&) {
    }

    // Probe B: transmit surface maximizing the power incident on the
    // receive surface (a generalized eigenvector in closed form), which is
    // the coordinated direction a rate-greedy step cannot see because the
    // incumbent receive surface discounts it.
    if (sp_t.extra_trace_pair && sp_t.trace_bound > 0.0) {
      const MatrixXcd& incident = sp_t.extra_trace_pair->second;
      const Eigen::VectorXd d = sp_t.trace_matrix.diagonal().real();
      const double d_max = d.maxCoeff();
      std::vector<Eigen::Index> sup;
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (d[i] > 1e-14 * d_max) sup.push_back(i);
      }
      if (!sup.empty()) {
        MatrixXcd m(sup.size(), sup.size());
        for (std::size_t a = 0; a < sup.size(); ++a) {
          for (std::size_t b = 0; b < sup.size(); ++b) {
            m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                incident(sup[a], sup[b]) / std::sqrt(d[sup[a]] * d[sup[b]]);
          }
        }
        const HermitianEigen eg = hermitian_eig(m);
        VectorXcd gt_cand = sol.gamma_t.gamma;
        for (std::size_t a = 0; a < sup.size(); ++a) {
          gt_cand[sup[a]] = eg.eigenvectors(static_cast<Eigen::Index>(a), 0) *
                            std::sqrt(sp_t.trace_bound / d[sup[a]]);
        }
        Probe b = finish_probe(std::move(gt_cand), 0.0);
        if (b.obj > best.obj) best = std::move(b);
      }
    }

    if (best.obj - obj <=
        opts.rel_obj_change * std::max(std::abs(obj), 1e-300)) {
      return false;
    }
    sol.gamma_t = std::move(best.gt);
    sol.gamma_r = std::move(best.gr);
    sol.q = std::move(best.q);
    sol.rank_ratio_t = best.ratio_t;
    sol.rank_ratio_r = best.ratio_r;
    sol.report.certificate = best.certificate;
    obj = best.obj;
    sol.report.objective_trace.push_back(obj);
    return true;
  };

  const auto t_start = std::chrono::steady_clock::now();
  const auto out_of_time = [&]() {
    return opts.time_cap_s > 0.0 &&
           std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
                   .count() > opts.time_cap_s;
  };
  for (int outer = 0; outer < opts.max_iters && !out_of_time(); ++outer) {
    ++sol.report.iterations;

    const SurfaceSubproblem sp_r =
        build_gamma_r_subproblem(ch, sol.gamma_t, sol.q, ch.sigma2);
    auto [gr, rep_r] =
        optimize_gamma_r(sp_r, sol.gamma_r.gamma, opts, nullptr,
                         &sol.rank_ratio_r);
    sol.gamma_r = std::move(gr);

    auto [gt, rep_t] = optimize_gamma_t(ch, sol.gamma_r, sol.q,
                                        sol.gamma_t.gamma, opts, nullptr,
                                        &sol.rank_ratio_t);
    sol.gamma_t = std::move(gt);

    auto [q, rep_q] = optimize_Q(ch, sol.gamma_t, sol.gamma_r, pm, p_max, mode,
                                 bandwidth_hz, opts, &sol.q);
    sol.q = std::move(q);
    sol.report.certificate = rep_q.certificate;

    const double next = evaluate();
    sol.report.objective_trace.push_back(next);
    const double delta = std::abs(next - obj);
    const bool settled =
        delta <= opts.rel_obj_change * std::max(std::abs(obj), 1e-300);
    obj = next;
    if (settled) {
      if (try_escape()) continue;
      sol.report.termination = Termination::Converged;
      break;
    }
  }

  sol.capacity_bps = capacity(ch, sol.gamma_t, sol.gamma_r,
                              TransmitState::covariance(sol.q), bandwidth_hz);
  sol.total_power_w = total_power(pm, ch, TransmitState::covariance(sol.q));
  sol.ee_bits_per_joule =
      energy_efficiency(sol.capacity_bps, sol.total_power_w);

  const ReflectionCheck rc = check_reflection(ch, sol.gamma_t, sol.gamma_r,
                                              TransmitState::covariance(sol.q));
  sol.report.constraint_residuals = {
      rc.tx_residual, rc.rx_residual,
      (sol.q.trace().real() - p_max) / std::max(p_max, 1e-300)};
  return sol;
}

}  // namespace hmimo

#endif  // HMIMO_MULTI_STREAM_HPP
