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

#ifndef HMIMO_CHANNEL_HPP
#define HMIMO_CHANNEL_HPP

#include <cmath>
#include <cstdint>
#include <string>

#include "hmimo/common.hpp"
#include "hmimo/rng.hpp"

namespace hmimo {

// Channel synthesis for a link where each antenna array illuminates a nearby
// reflective surface (spherical-wave regime) and the two surfaces see each
// other in the far field through a Rician fade.

/// A planar rectangular array or surface.
struct ArrayGeometry {
  MatrixXd element_positions;  // count x 3, meters
  double h_spacing = 0.0;      // meters
  double v_spacing = 0.0;
  double directivity = 1.0;  // boresight power gain factor of one element

  Eigen::Index count() const { return element_positions.rows(); }

  Vector3d center() const {
    if (element_positions.rows() == 0) return Vector3d::Zero();
    return element_positions.colwise().mean();
  }

  /// Effective aperture gain of one element: (4*pi/lambda^2) * dh * dv * rho.
  double element_gain(double wavelength) const {
    detail::check_positive(wavelength, "wavelength");
    detail::check_positive(h_spacing, "h_spacing");
    detail::check_positive(v_spacing, "v_spacing");
    detail::check_positive(directivity, "directivity");
    return 4.0 * kPi / (wavelength * wavelength) * h_spacing * v_spacing * directivity;
  }
};

namespace detail {

/// Near-square factorization for laying `count` elements on a grid: the row
/// count is the largest divisor not exceeding sqrt(count).
inline std::pair<int, int> grid_shape(int count) {
  int rows = 1;
  for (int r = 1; r * r <= count; ++r) {
    if (count % r == 0) rows = r;
  }
  return {rows, count / rows};
}

}  // namespace detail

/// Lay out `count` elements on a rectangular grid in the y-z plane centered at
/// `center` (all arrays face each other along the x axis).
inline ArrayGeometry make_rectangular_array(int count, double h_spacing, double v_spacing,
                                            const Vector3d& center, double directivity = 1.0) {
  if (count <= 0) throw dimension_error("array element count must be positive");
  detail::check_positive(h_spacing, "h_spacing");
  detail::check_positive(v_spacing, "v_spacing");
  detail::check_positive(directivity, "directivity");
  const auto [rows, cols] = detail::grid_shape(count);
  ArrayGeometry g;
  g.element_positions.resize(count, 3);
  g.h_spacing = h_spacing;
  g.v_spacing = v_spacing;
  g.directivity = directivity;
  int k = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c, ++k) {
      g.element_positions(k, 0) = center.x();
      g.element_positions(k, 1) = center.y() + (c - 0.5 * (cols - 1)) * h_spacing;
      g.element_positions(k, 2) = center.z() + (r - 0.5 * (rows - 1)) * v_spacing;
    }
  }
  return g;
}

/// Spherical-wave coupling coefficient between one radiating and one receiving
/// element: (lambda/4pi) * sqrt(g_from*g_to) * exp(-j*2*pi*d/lambda) / d.
inline cxd near_field_entry(const Vector3d& from, const Vector3d& to, double wavelength,
                            double gain_from, double gain_to) {
  detail::check_positive(wavelength, "wavelength");
  detail::check_positive(gain_from, "gain_from");
  detail::check_positive(gain_to, "gain_to");
  const double d = (to - from).norm();
  if (!(d > 0.0)) {
    throw model_error("near_field_entry: coincident elements (zero distance)");
  }
  const double amp = wavelength / (4.0 * kPi) * std::sqrt(gain_from * gain_to) / d;
  const double phase = -2.0 * kPi * d / wavelength;
  return std::polar(amp, phase);
}

/// Near-field channel between two arrays; rows are indexed by the destination
/// elements, columns by the source elements.
inline MatrixXcd synthesize_near_field(const ArrayGeometry& from, const ArrayGeometry& to,
                                       double wavelength) {
  const double gf = from.element_gain(wavelength);
  const double gt = to.element_gain(wavelength);
  MatrixXcd h(to.count(), from.count());
  for (Eigen::Index n = 0; n < to.count(); ++n) {
    const Vector3d pn = to.element_positions.row(n).transpose();
    for (Eigen::Index m = 0; m < from.count(); ++m) {
      const Vector3d pm = from.element_positions.row(m).transpose();
      h(n, m) = near_field_entry(pm, pn, wavelength, gf, gt);
    }
  }
  return h;
}

/// Distance-power path-loss law PL(d) = PL0 * (d/d0)^(-nu), linear scale.
inline double path_loss(double distance, double ref_pathloss, double ref_distance,
                        double exponent) {
  detail::check_positive(distance, "distance");
  detail::check_positive(ref_pathloss, "ref_pathloss");
  detail::check_positive(ref_distance, "ref_distance");
  if (!(exponent >= 0.0) || !std::isfinite(exponent)) {
    throw model_error("path_loss exponent must be nonnegative");
  }
  return ref_pathloss * std::pow(distance / ref_distance, -exponent);
}

/// Free-space power path loss (lambda / (4*pi*d))^2 at distance d.
inline double free_space_pathloss(double wavelength, double distance) {
  detail::check_positive(wavelength, "wavelength");
  detail::check_positive(distance, "distance");
  const double a = wavelength / (4.0 * kPi * distance);
  return a * a;
}

/// Rician fading block: sqrt(PL) * (sqrt(K/(K+1)) e^{j phi} + sqrt(1/(K+1)) w)
/// with w ~ CN(0,1) i.i.d. and a common deterministic plane-wave phase `phi`.
inline MatrixXcd synthesize_far_field(Eigen::Index rows, Eigen::Index cols, double k_factor,
                                      double pathloss, double los_phase, RandomStream& rng) {
  if (rows <= 0 || cols <= 0) throw dimension_error("far-field block must be non-empty");
  detail::check_nonnegative(k_factor, "Rice K factor");
  detail::check_positive(pathloss, "pathloss");
  const double amp = std::sqrt(pathloss);
  const cxd los = std::polar(std::sqrt(k_factor / (k_factor + 1.0)), los_phase);
  const double nlos_scale = std::sqrt(1.0 / (k_factor + 1.0));
  MatrixXcd c(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      c(i, j) = amp * (los + nlos_scale * rng.complex_normal());
    }
  }
  return c;
}

/// Thermal noise power in watts over `bandwidth` for the given one-sided PSD
/// (dBm/Hz) and receiver noise figure (dB).
inline double noise_power(double noise_psd_dbm_hz, double bandwidth_hz,
                          double noise_figure_db) {
  detail::check_positive(bandwidth_hz, "bandwidth");
  if (!std::isfinite(noise_psd_dbm_hz) || !std::isfinite(noise_figure_db)) {
    throw model_error("noise parameters must be finite");
  }
  return dbm_to_watts(noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db);
}

// ---------------------------------------------------------------------------
// End-to-end scenario.
// ---------------------------------------------------------------------------

/// Full description of one link: element layouts, fading statistics, noise.
struct LinkScenario {
  double carrier_freq_hz = 3.5e9;
  double bandwidth_hz = 20e6;
  ArrayGeometry tx_array;    // N_T digital chains
  ArrayGeometry tx_surface;  // M_T reflective elements
  ArrayGeometry rx_surface;  // M_R reflective elements
  ArrayGeometry rx_array;    // N_R digital chains
  double rice_k = 10.0;
  double pathloss_exponent = 2.0;
  double ref_distance_m = 1.0;
  double pathloss_ref = 0.0;  // linear PL at ref distance; <= 0 selects free space
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 5.0;
  std::uint64_t seed = 1;

  double wavelength() const {
    detail::check_positive(carrier_freq_hz, "carrier frequency");
    return kSpeedOfLight / carrier_freq_hz;
  }

  double surface_separation() const {
    return (rx_surface.center() - tx_surface.center()).norm();
  }

  double inter_surface_pathloss() const {
    const double d = surface_separation();
    const double pl0 =
        pathloss_ref > 0.0 ? pathloss_ref : free_space_pathloss(wavelength(), ref_distance_m);
    return path_loss(d, pl0, ref_distance_m, pathloss_exponent);
  }

  double noise_variance() const {
    return noise_power(noise_psd_dbm_hz, bandwidth_hz, noise_figure_db);
  }
};

/// Compact knob set from which the canonical scenario geometry is built: the
/// four planar arrays face each other along the x axis, each surface sitting
/// broadside at `array_surface_gap_m` in front of its array.
struct ScenarioParams {
  double carrier_freq_hz = 3.5e9;
  double bandwidth_hz = 20e6;
  int n_tx = 4;
  int n_rx = 4;
  int m_tx = 100;
  int m_rx = 100;
  double element_spacing_wavelengths = 0.5;
  double array_surface_gap_m = 0.5;
  double surface_separation_m = 100.0;
  double rice_k = 10.0;
  double pathloss_exponent = 2.0;
  double ref_distance_m = 1.0;
  double pathloss_ref = 0.0;  // <= 0: free space at ref distance
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 5.0;
  double directivity = 1.0;
  std::uint64_t seed = 1;
};

inline LinkScenario make_link_scenario(const ScenarioParams& p) {
  detail::check_positive(p.carrier_freq_hz, "carrier frequency");
  detail::check_positive(p.element_spacing_wavelengths, "element spacing");
  detail::check_positive(p.array_surface_gap_m, "array/surface gap");
  detail::check_positive(p.surface_separation_m, "surface separation");
  const double lambda = kSpeedOfLight / p.carrier_freq_hz;
  const double sp = p.element_spacing_wavelengths * lambda;
  const double gap = p.array_surface_gap_m;
  const double sep = p.surface_separation_m;
  LinkScenario s;
  s.carrier_freq_hz = p.carrier_freq_hz;
  s.bandwidth_hz = p.bandwidth_hz;
  s.tx_array = make_rectangular_array(p.n_tx, sp, sp, {0.0, 0.0, 0.0}, p.directivity);
  s.tx_surface = make_rectangular_array(p.m_tx, sp, sp, {gap, 0.0, 0.0}, p.directivity);
  s.rx_surface = make_rectangular_array(p.m_rx, sp, sp, {gap + sep, 0.0, 0.0}, p.directivity);
  s.rx_array =
      make_rectangular_array(p.n_rx, sp, sp, {2.0 * gap + sep, 0.0, 0.0}, p.directivity);
  s.rice_k = p.rice_k;
  s.pathloss_exponent = p.pathloss_exponent;
  s.ref_distance_m = p.ref_distance_m;
  s.pathloss_ref = p.pathloss_ref;
  s.noise_psd_dbm_hz = p.noise_psd_dbm_hz;
  s.noise_figure_db = p.noise_figure_db;
  s.seed = p.seed;
  return s;
}

/// One Monte-Carlo realization of the three channel blocks plus noise power.
///   H: tx array -> tx surface (M_T x N_T), deterministic near field
///   C: tx surface -> rx surface (M_R x M_T), Rician far field
///   G: rx surface -> rx array (N_R x M_R), deterministic near field
struct ChannelSet {
  MatrixXcd H;
  MatrixXcd C;
  MatrixXcd G;
  double sigma2 = 0.0;
};

inline ChannelSet build_channels(const LinkScenario& s, std::uint64_t draw_index = 0) {
  const double lambda = s.wavelength();
  ChannelSet cs;
  cs.H = synthesize_near_field(s.tx_array, s.tx_surface, lambda);
  cs.G = synthesize_near_field(s.rx_surface, s.rx_array, lambda);
  const double d = s.surface_separation();
  RandomStream rng(s.seed, "far_field_c", draw_index);
  cs.C = synthesize_far_field(s.rx_surface.count(), s.tx_surface.count(), s.rice_k,
                              s.inter_surface_pathloss(), -2.0 * kPi * d / lambda, rng);
  cs.sigma2 = s.noise_variance();
  return cs;
}

}  // namespace hmimo

#endif  // HMIMO_CHANNEL_HPP
