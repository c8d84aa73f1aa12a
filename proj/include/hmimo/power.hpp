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

#ifndef HMIMO_POWER_HPP
#define HMIMO_POWER_HPP

#include <string>
#include <utility>

#include "hmimo/channel.hpp"
#include "hmimo/common.hpp"
#include "hmimo/linalg.hpp"

namespace hmimo {

// Rate, power and feasibility bookkeeping for the two-surface link, shared by
// every solver tier and by the Monte-Carlo harness.

/// Per-element reflection coefficients of one surface.
struct SurfaceState {
  VectorXcd gamma;

  SurfaceState() = default;
  explicit SurfaceState(VectorXcd g) : gamma(std::move(g)) {}

  static SurfaceState all_ones(Eigen::Index m) {
    return SurfaceState(VectorXcd::Ones(m));
  }

  Eigen::Index size() const { return gamma.size(); }

  MatrixXcd as_diagonal() const { return gamma.asDiagonal(); }
};

/// Transmit-side state in one of three shapes: a full covariance (multi
/// stream), a beamforming vector (single stream), or a plain transmit power
/// (single antenna).
struct TransmitState {
  enum class Kind { Covariance, Beamvector, ScalarPower };

  Kind kind = Kind::ScalarPower;
  MatrixXcd Q;  // Kind::Covariance
  VectorXcd q;  // Kind::Beamvector
  double p = 0.0;  // Kind::ScalarPower

  static TransmitState covariance(MatrixXcd cov) {
    TransmitState t;
    t.kind = Kind::Covariance;
    t.Q = std::move(cov);
    return t;
  }

  static TransmitState beamvector(VectorXcd vec) {
    TransmitState t;
    t.kind = Kind::Beamvector;
    t.q = std::move(vec);
    return t;
  }

  static TransmitState scalar_power(double power) {
    detail::check_nonnegative(power, "transmit power");
    TransmitState t;
    t.kind = Kind::ScalarPower;
    t.p = power;
    return t;
  }

  /// Radiated power tr(Q), |q|^2 or p.
  double trace_power() const {
    switch (kind) {
      case Kind::Covariance:
        return Q.real().trace();
      case Kind::Beamvector:
        return q.squaredNorm();
      case Kind::ScalarPower:
        return p;
    }
    return 0.0;
  }
};

/// Static power accounting, all in watts.
struct PowerModel {
  double mu = 1.0;                    // amplifier inefficiency on radiated power
  double per_element_static_tx = 0.0;  // one tx-surface element
  double per_element_static_rx = 0.0;  // one rx-surface element
  double per_chain_static_tx = 0.0;    // one tx RF chain
  double per_chain_static_rx = 0.0;    // one rx RF chain
  double surface_overhead = 0.0;       // surface control circuitry
  double system_overhead = 0.0;        // everything else
};

/// Sum of all static terms for the given element/chain counts.
inline double static_power(const PowerModel& pm, Eigen::Index n_tx, Eigen::Index n_rx,
                           Eigen::Index m_tx, Eigen::Index m_rx) {
  detail::check_nonnegative(pm.mu, "mu");
  detail::check_nonnegative(pm.per_element_static_tx, "per_element_static_tx");
  detail::check_nonnegative(pm.per_element_static_rx, "per_element_static_rx");
  detail::check_nonnegative(pm.per_chain_static_tx, "per_chain_static_tx");
  detail::check_nonnegative(pm.per_chain_static_rx, "per_chain_static_rx");
  detail::check_nonnegative(pm.surface_overhead, "surface_overhead");
  detail::check_nonnegative(pm.system_overhead, "system_overhead");
  return static_cast<double>(m_tx) * pm.per_element_static_tx +
         static_cast<double>(m_rx) * pm.per_element_static_rx +
         static_cast<double>(n_tx) * pm.per_chain_static_tx +
         static_cast<double>(n_rx) * pm.per_chain_static_rx + pm.surface_overhead +
         pm.system_overhead;
}

/// Total consumed power mu * P_radiated + P_static.
inline double total_power(const PowerModel& pm, double radiated_power, Eigen::Index n_tx,
                          Eigen::Index n_rx, Eigen::Index m_tx, Eigen::Index m_rx) {
  detail::check_nonnegative(radiated_power, "radiated power");
  return pm.mu * radiated_power + static_power(pm, n_tx, n_rx, m_tx, m_rx);
}

inline double total_power(const PowerModel& pm, const ChannelSet& ch,
                          const TransmitState& tx) {
  return total_power(pm, tx.trace_power(), ch.H.cols(), ch.G.rows(), ch.H.rows(),
                     ch.G.cols());
}

namespace detail {

inline void check_channel_surface_dims(const ChannelSet& ch, const SurfaceState& gamma_t,
                                       const SurfaceState& gamma_r) {
  check_nonempty(ch.H, "H");
  check_nonempty(ch.C, "C");
  check_nonempty(ch.G, "G");
  if (ch.C.cols() != ch.H.rows()) {
    throw dimension_error("C/H dimension mismatch: C is " + std::to_string(ch.C.rows()) +
                          "x" + std::to_string(ch.C.cols()) + ", H has " +
                          std::to_string(ch.H.rows()) + " rows");
  }
  if (ch.G.cols() != ch.C.rows()) {
    throw dimension_error("G/C dimension mismatch");
  }
  if (gamma_t.size() != ch.H.rows()) {
    throw dimension_error("tx surface has " + std::to_string(gamma_t.size()) +
                          " coefficients, channel expects " + std::to_string(ch.H.rows()));
  }
  if (gamma_r.size() != ch.C.rows()) {
    throw dimension_error("rx surface has " + std::to_string(gamma_r.size()) +
                          " coefficients, channel expects " + std::to_string(ch.C.rows()));
  }
  check_positive(ch.sigma2, "noise power");
}

inline void check_transmit_dims(const ChannelSet& ch, const TransmitState& tx) {
  const Eigen::Index n_tx = ch.H.cols();
  switch (tx.kind) {
    case TransmitState::Kind::Covariance:
      if (tx.Q.rows() != n_tx || tx.Q.cols() != n_tx) {
        throw dimension_error("covariance must be " + std::to_string(n_tx) + "x" +
                              std::to_string(n_tx));
      }
      check_finite(tx.Q, "covariance");
      break;
    case TransmitState::Kind::Beamvector:
      if (tx.q.size() != n_tx) {
        throw dimension_error("beamvector must have length " + std::to_string(n_tx));
      }
      check_finite(tx.q, "beamvector");
      break;
    case TransmitState::Kind::ScalarPower:
      if (n_tx != 1 || ch.G.rows() != 1) {
        throw dimension_error("scalar transmit power requires a 1x1 antenna setup");
      }
      check_nonnegative(tx.p, "transmit power");
      break;
  }
}

}  // namespace detail

/// End-to-end digital-domain channel G * diag(gamma_r) * C * diag(gamma_t) * H.
inline MatrixXcd composite_channel(const ChannelSet& ch, const SurfaceState& gamma_t,
                                   const SurfaceState& gamma_r) {
  detail::check_channel_surface_dims(ch, gamma_t, gamma_r);
  return ch.G * gamma_r.gamma.asDiagonal() * ch.C * gamma_t.gamma.asDiagonal() * ch.H;
}

/// Achievable rate B * log2 det(I + T Q T^H / sigma^2) with T the composite
/// channel; the beamvector and scalar-power shapes use the equivalent rank-one
/// specializations.
inline double capacity(const ChannelSet& ch, const SurfaceState& gamma_t,
                       const SurfaceState& gamma_r, const TransmitState& tx,
                       double bandwidth_hz) {
  detail::check_positive(bandwidth_hz, "bandwidth");
  detail::check_transmit_dims(ch, tx);
  const MatrixXcd t = composite_channel(ch, gamma_t, gamma_r);
  switch (tx.kind) {
    case TransmitState::Kind::Covariance: {
      const MatrixXcd inner = MatrixXcd::Identity(t.rows(), t.rows()) +
                              (t * tx.Q * t.adjoint()) / ch.sigma2;
      return bandwidth_hz * logdet_psd(inner, "capacity argument");
    }
    case TransmitState::Kind::Beamvector: {
      const double snr = (t * tx.q).squaredNorm() / ch.sigma2;
      return bandwidth_hz * std::log2(1.0 + snr);
    }
    case TransmitState::Kind::ScalarPower: {
      const double snr = tx.p * std::norm(t(0, 0)) / ch.sigma2;
      return bandwidth_hz * std::log2(1.0 + snr);
    }
  }
  return 0.0;
}

/// Incident and reflected powers at the two surfaces.
struct SurfacePowers {
  double incident_tx = 0.0;   // tr(H Q H^H)
  double reflected_tx = 0.0;  // tr(Gt H Q H^H Gt^H)
  double incident_rx = 0.0;   // tr(C Gt H Q H^H Gt^H C^H)
  double reflected_rx = 0.0;  // tr(Gr ... Gr^H)
};

inline SurfacePowers surface_powers(const ChannelSet& ch, const SurfaceState& gamma_t,
                                    const SurfaceState& gamma_r, const TransmitState& tx) {
  detail::check_channel_surface_dims(ch, gamma_t, gamma_r);
  detail::check_transmit_dims(ch, tx);
  SurfacePowers sp;
  if (tx.kind == TransmitState::Kind::Covariance) {
    const MatrixXcd a = ch.H * tx.Q * ch.H.adjoint();  // M_T x M_T
    sp.incident_tx = a.real().trace();
    sp.reflected_tx = (gamma_t.gamma.cwiseAbs2().array() * a.diagonal().real().array()).sum();
    const MatrixXcd z = ch.C * gamma_t.gamma.asDiagonal();
    const MatrixXcd b = z * a * z.adjoint();  // M_R x M_R
    sp.incident_rx = b.real().trace();
    sp.reflected_rx = (gamma_r.gamma.cwiseAbs2().array() * b.diagonal().real().array()).sum();
  } else {
    // Rank-one shapes never need the M x M products.
    VectorXcd v;  // = H q
    if (tx.kind == TransmitState::Kind::Beamvector) {
      v = ch.H * tx.q;
    } else {
      v = ch.H.col(0) * std::sqrt(tx.p);
    }
    sp.incident_tx = v.squaredNorm();
    const VectorXcd vt = gamma_t.gamma.cwiseProduct(v);
    sp.reflected_tx = vt.squaredNorm();
    const VectorXcd x = ch.C * vt;
    sp.incident_rx = x.squaredNorm();
    sp.reflected_rx = gamma_r.gamma.cwiseProduct(x).squaredNorm();
  }
  return sp;
}

/// Result of checking the two global reflection constraints
/// (reflected power must not exceed incident power at either surface).
struct ReflectionCheck {
  bool feasible = false;
  double tx_residual = 0.0;  // (reflected - incident) / max(incident, floor)
  double rx_residual = 0.0;
  SurfacePowers powers;
};

/// Absolute floor (watts) under which incident powers are treated as zero.
inline constexpr double kReflectionPowerFloor = 1e-15;

inline ReflectionCheck check_reflection(const ChannelSet& ch, const SurfaceState& gamma_t,
                                        const SurfaceState& gamma_r, const TransmitState& tx,
                                        double rel_tol = 1e-8) {
  ReflectionCheck rc;
  rc.powers = surface_powers(ch, gamma_t, gamma_r, tx);
  rc.tx_residual = (rc.powers.reflected_tx - rc.powers.incident_tx) /
                   std::max(rc.powers.incident_tx, kReflectionPowerFloor);
  rc.rx_residual = (rc.powers.reflected_rx - rc.powers.incident_rx) /
                   std::max(rc.powers.incident_rx, kReflectionPowerFloor);
  rc.feasible = rc.tx_residual <= rel_tol && rc.rx_residual <= rel_tol;
  return rc;
}

/// Bits per joule.
inline double energy_efficiency(double capacity_bps, double total_power_w) {
  if (!(total_power_w > 0.0) || !std::isfinite(total_power_w)) {
    throw model_error("total power must be positive to form an energy efficiency");
  }
  detail::check_nonnegative(capacity_bps, "capacity");
  return capacity_bps / total_power_w;
}

}  // namespace hmimo

#endif  // HMIMO_POWER_HPP
