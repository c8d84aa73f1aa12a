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

#ifndef HMIMO_SINGLE_STREAM_HPP
#define HMIMO_SINGLE_STREAM_HPP

// Rank-1 transmission through the two-surface link: closed-form surface
// updates for a fixed beamformer, a sequential convex beamformer step built
// on linearized reflection caps, and the alternating outer loop that ties
// the two together.

#include <cmath>
#include <utility>
#include <vector>

#include "hmimo/channel.hpp"
#include "hmimo/common.hpp"
#include "hmimo/convex.hpp"
#include "hmimo/convex_types.hpp"
#include "hmimo/power.hpp"
#include "hmimo/siso.hpp"

namespace hmimo {

struct SingleStreamSolution {
  SurfaceState gamma_t;
  SurfaceState gamma_r;
  VectorXcd q;
  double capacity_bps = 0.0;
  double total_power_w = 0.0;
  double ee_bits_per_joule = 0.0;
  SolveReport report;
};

/// Closed-form surfaces for a fixed beamvector: the incident vector is
/// h = H q, after which the construction is the same funnel-and-rephase
/// used by the single-antenna solver.
inline std::pair<SurfaceState, SurfaceState> optimize_surfaces_given_q(
    const ChannelSet& ch, const VectorXcd& q) {
  return optimize_surfaces_rank1(ch, q);
}

namespace detail {

struct BeamSurrogate {
  MatrixXcd mtm;        // M^H M with M the noise-normalized composite channel
  MatrixXcd hh;         // H^H H
  MatrixXcd a1;         // (Gamma_T H)^H (Gamma_T H)
  MatrixXcd t33;        // (C Gamma_T H)^H (C Gamma_T H)
  MatrixXcd a2;         // (Gamma_R C Gamma_T H)^H (Gamma_R C Gamma_T H)
  bool drop_tx_cap = false;
  bool drop_rx_cap = false;
  double mu = 0.0;
  double p_c = 0.0;
};

inline BeamSurrogate make_beam_surrogate(const ChannelSet& ch,
                                         const SurfaceState& gamma_t,
                                         const SurfaceState& gamma_r,
                                         const PowerModel& pm) {
  BeamSurrogate s;
  const MatrixXcd t1 = gamma_t.gamma.asDiagonal() * ch.H;
  const MatrixXcd t3 = ch.C * t1;
  const MatrixXcd t2 = gamma_r.gamma.asDiagonal() * t3;
  const MatrixXcd m = (ch.G * t2) / std::sqrt(ch.sigma2);
  s.mtm = m.adjoint() * m;
  s.hh = ch.H.adjoint() * ch.H;
  s.a1 = t1.adjoint() * t1;
  s.t33 = t3.adjoint() * t3;
  s.a2 = t2.adjoint() * t2;
  // When the linearized cap's quadratic form coincides with its right-hand
  // side form, the true cap is satisfied identically by every beamvector
  // while the linearized version pins q to q0; drop the vacuous row.
  s.drop_tx_cap = (s.a1 - s.hh).norm() <= 1e-12 * std::max(s.hh.norm(), 1e-300);
  s.drop_rx_cap = (s.a2 - s.t33).norm() <= 1e-12 * std::max(s.t33.norm(), 1e-300);
  s.mu = pm.mu;
  s.p_c = static_power(pm, ch.H.cols(), ch.G.rows(), ch.H.rows(), ch.G.cols());
  return s;
}

/// True per-Hz objective of the beamformer step: rate for capacity mode,
/// rate over consumed power for energy-efficiency mode.
inline double beam_objective_per_hz(const BeamSurrogate& s, const VectorXcd& q,
                                    OptimizeMode mode) {
  const double snr = std::max(0.0, q.dot(s.mtm * q).real());
  const double rate = std::log2(1.0 + snr);
  if (mode == OptimizeMode::Capacity) return rate;
  return rate / (s.mu * q.squaredNorm() + s.p_c);
}

/// Exact power step along the anchor's direction. The true reflection caps
/// are homogeneous of degree two in the beamvector, so the whole ray through
/// a feasible anchor stays feasible and the problem collapses to the scalar
/// radiated-power search.
inline VectorXcd solve_beam_ray(const BeamSurrogate& s, double p_max,
                                OptimizeMode mode, const VectorXcd& q0) {
  const double p0 = q0.squaredNorm();
  if (!(p0 > 0.0)) return q0;
  const VectorXcd u = q0 / std::sqrt(p0);
  if (mode == OptimizeMode::Capacity)
    return VectorXcd(std::sqrt(p_max) * u);
  const double gain = std::max(0.0, u.dot(s.mtm * u).real());
  const double p = optimize_power_siso(gain, s.mu, s.p_c, p_max);
  return VectorXcd(std::sqrt(p) * u);
}

/// One inner surrogate maximization around the anchor q0. Returns the
/// candidate beamvector; `certificate` receives the final fractional-search
/// residual (0 in capacity mode, where no fractional search is needed).
inline VectorXcd solve_beam_surrogate(const BeamSurrogate& s, double p_max,
                                      OptimizeMode mode, const VectorXcd& q0,
                                      const SolverOptions& opts,
                                      double* certificate, double* kkt) {
  const int n = static_cast<int>(q0.size());
  const VectorXcd m0v = s.mtm * q0;
  const double m0s = std::max(0.0, q0.dot(s.mtm * q0).real());

  // Freshly rebuilt surfaces satisfy both reflection caps with equality at
  // the anchor, and the two linearized caps then pin the beamvector to the
  // anchor itself (their boundary ellipsoids meet only there). The true
  // caps are direction-only constraints, so fall back to the exact power
  // step along the anchor ray in that case.
  if (!s.drop_tx_cap && !s.drop_rx_cap) {
    const double v1 = q0.dot(s.a1 * q0).real() - q0.dot(s.hh * q0).real();
    const double v2 = q0.dot(s.a2 * q0).real() - q0.dot(s.t33 * q0).real();
    const double sc1 = std::max(s.a1.norm() + s.hh.norm(), 1.0) *
                       std::max(q0.squaredNorm(), 1.0);
    const double sc2 = std::max(s.a2.norm() + s.t33.norm(), 1.0) *
                       std::max(q0.squaredNorm(), 1.0);
    if (std::abs(v1) <= 1e-9 * sc1 && std::abs(v2) <= 1e-9 * sc2) {
      if (certificate != nullptr) *certificate = 0.0;
      if (kkt != nullptr) *kkt = 0.0;
      return solve_beam_ray(s, p_max, mode, q0);
    }
  }

  std::vector<QuadConstraint> cons;
  if (!s.drop_tx_cap) {
    QuadConstraint qc;
    qc.a = s.a1;
    qc.c = s.hh * q0;
    qc.d = q0.dot(s.hh * q0).real();
    cons.push_back(std::move(qc));
  }
  if (!s.drop_rx_cap) {
    QuadConstraint qc;
    qc.a = s.a2;
    qc.c = s.t33 * q0;
    qc.d = q0.dot(s.t33 * q0).real();
    cons.push_back(std::move(qc));
  }
  {
    // Keep the logarithm's argument positive: 1 + lin(q) >= 1e-12.
    QuadConstraint guard;
    guard.c = m0v;
    guard.d = m0s - 1.0 + 1e-12;
    cons.push_back(std::move(guard));
  }

  const auto lin_arg = [&](const VectorXcd& q) {
    return 1.0 + 2.0 * m0v.dot(q).real() - m0s;
  };
  const double inv_ln2 = 1.0 / std::log(2.0);

  const auto make_objective = [&](double eta_mu) {
    ConcaveObjective obj;
    obj.value = [&, eta_mu](const VectorXcd& q) {
      return inv_ln2 * std::log(lin_arg(q)) - eta_mu * q.squaredNorm();
    };
    obj.gradient = [&, eta_mu](const VectorXcd& q) {
      const double arg = lin_arg(q);
      return VectorXcd(inv_ln2 / arg * m0v - eta_mu * q);
    };
    obj.hessian = [&, eta_mu, n](const VectorXcd& q) {
      const double arg = lin_arg(q);
      Eigen::VectorXd v(2 * n);
      v.head(n) = 2.0 * m0v.real();
      v.tail(n) = 2.0 * m0v.imag();
      MatrixXd h = -(inv_ln2 / (arg * arg)) * (v * v.transpose());
      h.diagonal().array() -= 2.0 * eta_mu;
      return h;
    };
    return obj;
  };

  try {
    if (mode == OptimizeMode::Capacity) {
      const auto sol = solve_concave_quadratic(n, make_objective(0.0), cons,
                                               p_max, &q0, opts);
      if (certificate != nullptr) *certificate = 0.0;
      if (kkt != nullptr) *kkt = sol.report.kkt_residual;
      return sol.q;
    }

    FractionalProblem<VectorXcd> fp;
    fp.numerator = [&](const VectorXcd& q) {
      return inv_ln2 * std::log(std::max(lin_arg(q), 1e-300));
    };
    fp.denominator = [&](const VectorXcd& q) {
      return s.mu * q.squaredNorm() + s.p_c;
    };
    fp.maximize_shifted = [&](double eta, const VectorXcd& warm,
                              SolveReport* inner) {
      ConcaveObjective obj = make_objective(eta * s.mu);
      const auto sol =
          solve_concave_quadratic(n, obj, cons, p_max, &warm, opts);
      if (inner != nullptr) *inner = sol.report;
      return sol.q;
    };
    auto [q, rep] = dinkelbach(fp, q0, opts);
    if (certificate != nullptr) *certificate = rep.certificate;
    if (kkt != nullptr) *kkt = rep.kkt_residual;
    return q;
  } catch (const solver_error&) {
    // A numerically void surrogate interior (caps meeting only at the
    // anchor) leaves the exact ray step as the safe monotone move.
    if (certificate != nullptr) *certificate = 0.0;
    if (kkt != nullptr) *kkt = 0.0;
    return solve_beam_ray(s, p_max, mode, q0);
  }
}

}  // namespace detail

/// Sequential maximization of the beamformer for fixed surfaces. Each round
/// linearizes the cascade gain and the reflection caps around the incumbent,
/// solves the resulting pseudo-concave surrogate, and accepts the candidate
/// only if the true objective does not decrease. Works in per-Hz units; the
/// reported trace is scaled by `bandwidth_hz`.
inline VectorXcd sfp_beamforming(const ChannelSet& ch,
                                 const SurfaceState& gamma_t,
                                 const SurfaceState& gamma_r,
                                 const PowerModel& pm, double p_max,
                                 OptimizeMode mode, double bandwidth_hz,
                                 VectorXcd q0, const SolverOptions& opts = {},
                                 SolveReport* report = nullptr) {
  detail::check_positive(p_max, "P_max");
  detail::check_positive(bandwidth_hz, "bandwidth");
  if (q0.size() != ch.H.cols())
    throw dimension_error("sfp_beamforming: q0 must have N_T entries");
  if (q0.squaredNorm() > p_max * (1.0 + opts.feas_tol) + opts.feas_tol)
    throw model_error("sfp_beamforming: q0 violates the power budget");

  const auto s = detail::make_beam_surrogate(ch, gamma_t, gamma_r, pm);
  SolveReport rep;
  rep.termination = Termination::MaxIters;

  VectorXcd q = std::move(q0);
  double obj = detail::beam_objective_per_hz(s, q, mode);
  rep.objective_trace.push_back(bandwidth_hz * obj);
  for (int k = 0; k < opts.max_iters; ++k) {
    ++rep.iterations;
    double cert = 0.0;
    double kkt = 0.0;
    const VectorXcd cand =
        detail::solve_beam_surrogate(s, p_max, mode, q, opts, &cert, &kkt);
    const double cand_obj = detail::beam_objective_per_hz(s, cand, mode);
    rep.certificate = cert;
    rep.kkt_residual = kkt;
    if (!(cand_obj >= obj)) {
      // The surrogate is deterministic in its anchor; a non-improving
      // candidate means the incumbent is already a fixed point.
      rep.termination = Termination::Converged;
      break;
    }
    const double delta = cand_obj - obj;
    const double step = (cand - q).norm();
    q = cand;
    obj = cand_obj;
    rep.objective_trace.push_back(bandwidth_hz * obj);
    // The objective is quadratically flat around the fixed point, so an
    // objective-change rule alone would leave the argument ~sqrt(tol) away.
    // Converge on the step size instead, with a deep objective floor for
    // flat directions.
    if (step <= 1e-8 * std::max(1.0, q.norm()) ||
        delta <= 1e-12 * std::max(std::abs(obj), 1e-300)) {
      rep.termination = Termination::Converged;
      break;
    }
  }

  const auto rc = check_reflection(ch, gamma_t, gamma_r,
                                   TransmitState::beamvector(q));
  rep.constraint_residuals = {rc.tx_residual, rc.rx_residual};
  if (report != nullptr) *report = rep;
  return q;
}

/// Alternating maximization over (surfaces, beamvector) for rank-1
/// transmission. Starts from the maximum-ratio direction of the direct
/// surface link at full power with unit-modulus surfaces, then alternates
/// the closed-form surface update with the sequential beamformer step until
/// the objective stalls.
inline SingleStreamSolution alternate_single_stream(
    const ChannelSet& ch, const PowerModel& pm, double p_max,
    OptimizeMode mode = OptimizeMode::EnergyEfficiency,
    double bandwidth_hz = 1.0, const SolverOptions& opts = {}) {
  detail::check_positive(p_max, "P_max");
  detail::check_positive(bandwidth_hz, "bandwidth");
  detail::check_positive(ch.sigma2, "noise power");
  if (ch.H.rows() != ch.C.cols() || ch.C.rows() != ch.G.cols())
    throw dimension_error("alternate_single_stream: inconsistent channel shapes");

  SingleStreamSolution sol;
  sol.gamma_t = SurfaceState::all_ones(ch.H.rows());
  sol.gamma_r = SurfaceState::all_ones(ch.C.rows());

  Eigen::JacobiSVD<MatrixXcd> svd(ch.H, Eigen::ComputeThinV);
  sol.q = std::sqrt(p_max) * svd.matrixV().col(0);

  sol.report.termination = Termination::MaxIters;
  double obj = -1.0;
  for (int k = 0; k < opts.max_iters; ++k) {
    ++sol.report.iterations;
    std::tie(sol.gamma_t, sol.gamma_r) = optimize_surfaces_rank1(ch, sol.q);
    SolveReport sfp_rep;
    sol.q = sfp_beamforming(ch, sol.gamma_t, sol.gamma_r, pm, p_max, mode,
                            bandwidth_hz, sol.q, opts, &sfp_rep);
    sol.report.certificate = sfp_rep.certificate;
    sol.report.kkt_residual = sfp_rep.kkt_residual;

    const double cap = capacity(ch, sol.gamma_t, sol.gamma_r,
                                TransmitState::beamvector(sol.q), bandwidth_hz);
    const double pow_w = total_power(pm, ch, TransmitState::beamvector(sol.q));
    const double next =
        mode == OptimizeMode::Capacity ? cap : energy_efficiency(cap, pow_w);
    sol.report.objective_trace.push_back(next);
    const bool settled =
        obj >= 0.0 &&
        std::abs(next - obj) <= opts.rel_obj_change * std::max(obj, 1e-300);
    obj = std::max(obj, next);
    if (settled) {
      sol.report.termination = Termination::Converged;
      break;
    }
  }

  sol.capacity_bps = capacity(ch, sol.gamma_t, sol.gamma_r,
                              TransmitState::beamvector(sol.q), bandwidth_hz);
  sol.total_power_w = total_power(pm, ch, TransmitState::beamvector(sol.q));
  sol.ee_bits_per_joule = energy_efficiency(sol.capacity_bps, sol.total_power_w);
  const auto rc = check_reflection(ch, sol.gamma_t, sol.gamma_r,
                                   TransmitState::beamvector(sol.q));
  sol.report.constraint_residuals = {rc.tx_residual, rc.rx_residual};
  return sol;
}

}  // namespace hmimo

#endif  // HMIMO_SINGLE_STREAM_HPP
