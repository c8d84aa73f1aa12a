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

#ifndef HMIMO_SISO_HPP
#define HMIMO_SISO_HPP

#include <cmath>
#include <utility>

#include "hmimo/channel.hpp"
#include "hmimo/common.hpp"
#include "hmimo/convex_types.hpp"
#include "hmimo/linalg.hpp"
#include "hmimo/power.hpp"

// Closed-form design for the single-antenna link and for a fixed transmit
// beam: both surfaces are chosen to funnel the incident power through the
// strongest singular mode of the inter-surface channel and re-phase it onto
// the strongest receive direction, meeting both global reflection-power
// constraints with equality.

namespace hmimo {

/// Entries whose magnitude falls below this fraction of the largest incident
/// amplitude are dark: their reflection coefficient is forced to zero.
inline constexpr double kDarkElementThreshold = 1e-12;

struct SisoSolution {
  SurfaceState gamma_t;
  SurfaceState gamma_r;
  double power = 0.0;           // radiated power p (W)
  double effective_gain = 0.0;  // a, with capacity = B log2(1 + a p)
  double capacity_bps = 0.0;
  double total_power_w = 0.0;
  double ee_bits_per_joule = 0.0;
  SolveReport report;
};

/// Radiated power maximizing log2(1 + a p) / (mu p + p_c) over (0, p_max].
/// The stationarity condition
///   phi(p) = a (mu p + p_c) / (1 + a p) - mu ln(1 + a p) = 0
/// has phi(0) = a p_c >= 0 and phi strictly decreasing past its root, so the
/// maximizer is min(p_max, p*), located here by bisection.
inline double optimize_power_siso(double a, double mu, double p_c,
                                  double p_max, double rel_tol = 1e-12) {
  detail::check_nonnegative(a, "effective gain");
  detail::check_nonnegative(mu, "power amplifier slope");
  detail::check_nonnegative(p_c, "static power");
  detail::check_positive(p_max, "power budget");
  if (a == 0.0 || p_c == 0.0) return 0.0;  // ratio decreasing from its sup
  if (mu == 0.0) return p_max;             // ratio strictly increasing
  const auto phi = [&](double p) {
    return a * (mu * p + p_c) / (1.0 + a * p) - mu * std::log1p(a * p);
  };
  if (phi(p_max) >= 0.0) return p_max;  // stationary point beyond the cap
  double lo = 0.0, hi = p_max;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) >= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Jointly optimal surfaces for a fixed transmit vector `q` when a single
/// stream is sent: with h = H q,
///   - the transmit surface maps h onto x = ||h|| sqrt(lmax(C C^H)) u_max via
///     the left pseudo-inverse of C,
///   - the receive surface re-phases x onto the principal eigenvector of
///     G^H G at unchanged power,
/// so both reflection constraints hold with equality and the received SNR is
/// lmax(C C^H) lmax(G^H G) ||h||^2 / sigma^2 (less dark-element truncation).
inline std::pair<SurfaceState, SurfaceState> optimize_surfaces_rank1(
    const ChannelSet& ch, const VectorXcd& q) {
  const int m_t = static_cast<int>(ch.H.rows());
  const int m_r = static_cast<int>(ch.C.rows());
  if (ch.H.cols() != q.size())
    throw dimension_error("optimize_surfaces_rank1: beam length mismatch");
  if (m_t > m_r)
    throw dimension_error(
        "optimize_surfaces_rank1: more transmit than receive elements "
        "(the inter-surface channel has no left inverse)");
  SurfaceState gt{VectorXcd::Zero(m_t)};
  SurfaceState gr{VectorXcd::Zero(m_r)};

  const VectorXcd h = ch.H * q;
  const double h_max = h.size() ? h.cwiseAbs().maxCoeff() : 0.0;
  if (h_max <= 0.0) return {gt, gr};  // nothing incident: all elements dark

  const auto [lam_c, u_c] = principal_eigpair(
      MatrixXcd(ch.C * ch.C.adjoint()));
  if (lam_c <= 0.0) return {gt, gr};
  const MatrixXcd c_pinv = left_pseudo_inverse(ch.C);
  const VectorXcd x_bar = h.norm() * std::sqrt(lam_c) * u_c;
  const VectorXcd w = c_pinv * x_bar;
  for (int i = 0; i < m_t; ++i)
    if (std::abs(h[i]) > kDarkElementThreshold * h_max)
      gt.gamma[i] = w[i] / h[i];

  const VectorXcd x = ch.C * gt.gamma.cwiseProduct(h);
  const double x_max = x.cwiseAbs().maxCoeff();
  if (x_max <= 0.0) return {gt, gr};
  const auto [lam_g, u_g] = principal_eigpair(
      MatrixXcd(ch.G.adjoint() * ch.G));
  if (lam_g <= 0.0) return {gt, gr};
  const VectorXcd y_bar = x.norm() * u_g;
  for (int i = 0; i < m_r; ++i)
    if (std::abs(x[i]) > kDarkElementThreshold * x_max)
      gr.gamma[i] = y_bar[i] / x[i];
  return {gt, gr};
}

/// Globally optimal design of both surfaces and the radiated power for the
/// single-antenna link.
inline SisoSolution solve_siso(const ChannelSet& ch, const PowerModel& pm,
                               double p_max,
                               OptimizeMode mode = OptimizeMode::EnergyEfficiency,
                               double bandwidth_hz = 1.0,
                               const SolverOptions& /*opts*/ = {}) {
  if (ch.H.cols() != 1 || ch.G.rows() != 1)
    throw dimension_error("solve_siso: expects one antenna at each end");
  detail::check_positive(p_max, "power budget");
  detail::check_positive(bandwidth_hz, "bandwidth");

  SisoSolution sol;
  auto [gt, gr] = optimize_surfaces_rank1(ch, VectorXcd::Ones(1));
  sol.gamma_t = std::move(gt);
  sol.gamma_r = std::move(gr);

  const MatrixXcd t = composite_channel(ch, sol.gamma_t, sol.gamma_r);
  sol.effective_gain = std::norm(t(0, 0)) / ch.sigma2;

  const int m_t = static_cast<int>(ch.H.rows());
  const int m_r = static_cast<int>(ch.C.rows());
  const double p_c = static_power(pm, 1, 1, m_t, m_r);
  sol.power = (mode == OptimizeMode::Capacity)
                  ? p_max
                  : optimize_power_siso(sol.effective_gain, pm.mu, p_c, p_max);

  const TransmitState tx = TransmitState::scalar_power(sol.power);
  sol.capacity_bps = capacity(ch, sol.gamma_t, sol.gamma_r, tx, bandwidth_hz);
  sol.total_power_w = total_power(pm, ch, tx);
  sol.ee_bits_per_joule =
      sol.capacity_bps > 0.0
          ? energy_efficiency(sol.capacity_bps, sol.total_power_w)
          : 0.0;

  sol.report.iterations = 1;
  sol.report.termination = Termination::Converged;
  sol.report.objective_trace.push_back(sol.ee_bits_per_joule);
  const ReflectionCheck rc =
      check_reflection(ch, sol.gamma_t, sol.gamma_r, tx);
  sol.report.constraint_residuals = {rc.tx_residual, rc.rx_residual};
  return sol;
}

}  // namespace hmimo

#endif  // HMIMO_SISO_HPP
