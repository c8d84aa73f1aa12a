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

#ifndef HMIMO_ORACLE_HPP
#define HMIMO_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "hmimo/channel.hpp"
#include "hmimo/common.hpp"
#include "hmimo/multi_stream.hpp"
#include "hmimo/power.hpp"
#include "hmimo/rng.hpp"

// Reference implementations used to cross-check the solvers.  Everything in
// this header is written against plain Eigen primitives and elementary
// formulas, independent of the solver stack.

namespace hmimo::oracle {

struct RandomSearchResult {
  double best_ee = 0.0;    // bits/J at bandwidth_hz
  double best_gain = 0.0;  // best effective gain a seen
  double best_power = 0.0;
  int samples = 0;
};

/// Monte-Carlo baseline for the single-antenna link: random surface
/// configurations rescaled onto the reflection-power boundary, with the
/// radiated power picked from a uniform grid.
///
/// The candidate EE for a gain a, max_p B log2(1 + a p) / (mu p + p_c), is
/// nondecreasing in a pointwise over the power grid, so the grid only needs
/// to be evaluated when a sample improves the incumbent gain; the result is
/// identical to scanning the grid for every sample.
inline RandomSearchResult random_search_siso(const ChannelSet& ch,
                                             const PowerModel& pm,
                                             double p_max, int n_samples,
                                             int n_power_grid, uint64_t seed,
                                             double bandwidth_hz = 1.0) {
  const int m_t = static_cast<int>(ch.H.rows());
  const int m_r = static_cast<int>(ch.C.rows());
  const VectorXcd h = ch.H.col(0);
  const double p_c = static_power(pm, 1, 1, m_t, m_r);
  const double inc_t = h.squaredNorm();

  RandomSearchResult res;
  res.samples = n_samples;
  VectorXcd gt(m_t), v(m_t), x(m_r), y(m_r);
  for (int s = 0; s < n_samples; ++s) {
    RandomStream rs(seed, "random_search_siso", static_cast<uint64_t>(s));
    for (int i = 0; i < m_t; ++i) gt[i] = rs.complex_normal();
    v = gt.cwiseProduct(h);
    const double refl_t = v.squaredNorm();
    if (refl_t <= 0.0) continue;
    v *= std::sqrt(inc_t / refl_t);  // transmit reflection boundary
    x = ch.C * v;
    const double inc_r = x.squaredNorm();
    if (inc_r <= 0.0) continue;
    for (int i = 0; i < m_r; ++i) y[i] = rs.complex_normal();
    y = y.cwiseProduct(x);
    const double refl_r = y.squaredNorm();
    if (refl_r <= 0.0) continue;
    y *= std::sqrt(inc_r / refl_r);  // receive reflection boundary
    const cxd t = (ch.G.row(0) * y).value();
    const double a = std::norm(t) / ch.sigma2;
    if (a <= res.best_gain) continue;
    res.best_gain = a;
    for (int k = 1; k <= n_power_grid; ++k) {
      const double p = p_max * k / n_power_grid;
      const double ee =
          bandwidth_hz * std::log2(1.0 + a * p) / (pm.mu * p + p_c);
      if (ee > res.best_ee) {
        res.best_ee = ee;
        res.best_power = p;
      }
    }
  }
  return res;
}

struct WaterFillingResult {
  VectorXd powers;          // per-eigenmode allocation
  MatrixXcd q;              // covariance realizing the allocation
  double capacity_bits = 0; // bits/s/Hz
};

/// Classic water-filling: max sum log2(1 + g_i p_i) with sum p_i <= total.
/// `gram` is the noise-normalized channel Gram matrix T^H T / sigma^2 whose
/// eigenvalues are the mode gains.
inline WaterFillingResult water_filling(const MatrixXcd& gram,
                                        double total_power) {
  if (gram.rows() != gram.cols())
    throw dimension_error("water_filling: Gram matrix must be square");
  detail::check_positive(total_power, "power budget");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(
      MatrixXcd(0.5 * (gram + gram.adjoint())));
  const int n = static_cast<int>(gram.rows());
  VectorXd g = es.eigenvalues().cwiseMax(0.0);
  // Order modes by decreasing gain.
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return g[a] > g[b]; });

  WaterFillingResult res;
  res.powers = VectorXd::Zero(n);
  int active = 0;
  double level = 0.0;
  double inv_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double gk = g[idx[k]];
    if (gk <= 0.0) break;
    inv_sum += 1.0 / gk;
    const double cand = (total_power + inv_sum) / (k + 1);
    if (cand < 1.0 / gk) break;  // mode k would get negative power
    level = cand;
    active = k + 1;
  }
  res.q = MatrixXcd::Zero(n, n);
  for (int k = 0; k < active; ++k) {
    const int i = idx[k];
    const double p = level - 1.0 / g[i];
    res.powers[i] = p;
    res.capacity_bits += std::log2(1.0 + g[i] * p);
    res.q.noalias() +=
        p * es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  }
  return res;
}

/// Boundary-grid reference for a two-element surface subproblem.  The rate
/// only grows when the reflection vector is scaled up and ignores a global
/// phase, so the optimum sits on the power-budget boundary and a grid over
/// (mixing angle, relative phase) covers the entire feasible set; the
/// downstream budget, when present, is scale-invariant and acts as a filter.
/// The coarse winner is polished by pattern search with shrinking steps.
inline double grid_surface_oracle(const SurfaceSubproblem& sp,
                                  double step = 2e-2,
                                  int refine_rounds = 40) {
  if (sp.dim != 2) {
    throw dimension_error(
        "grid_surface_oracle: built for two-element surfaces");
  }
  const double d1 = std::real(sp.trace_matrix(0, 0));
  const double d2 = std::real(sp.trace_matrix(1, 1));
  if (!(d1 > 0.0) || !(d2 > 0.0) || !(sp.trace_bound > 0.0)) {
    throw model_error("grid_surface_oracle: degenerate power budget");
  }
  const double r1 = std::sqrt(sp.trace_bound / d1);
  const double r2 = std::sqrt(sp.trace_bound / d2);
  const double pair_scale =
      sp.extra_trace_pair
          ? sp.extra_trace_pair->first.norm() + sp.extra_trace_pair->second.norm()
          : 0.0;

  const auto value = [&](double t, double phi) {
    VectorXcd g(2);
    g << cxd(r1 * std::cos(t), 0.0), std::polar(r2 * std::sin(t), phi);
    if (sp.extra_trace_pair) {
      const double excess = std::real(g.dot(sp.extra_trace_pair->first * g)) -
                            std::real(g.dot(sp.extra_trace_pair->second * g));
      if (excess > 1e-9 * pair_scale * std::max(g.squaredNorm(), 1e-300)) {
        return -std::numeric_limits<double>::infinity();
      }
    }
    return surface_objective_bits(sp, g);
  };

  constexpr double kPi = std::numbers::pi;
  double best = -std::numeric_limits<double>::infinity();
  double bt = 0.0, bphi = 0.0;
  const int nt = static_cast<int>(std::ceil(0.5 * kPi / step));
  const int np = static_cast<int>(std::ceil(2.0 * kPi / step));
  for (int i = 0; i <= nt; ++i) {
    const double t = std::min(i * step, 0.5 * kPi);
    for (int j = 0; j < np; ++j) {
      const double v = value(t, j * step);
      if (v > best) {
        best = v;
        bt = t;
        bphi = j * step;
      }
    }
  }

  double h = step;
  for (int round = 0; round < refine_rounds; ++round) {
    bool moved = true;
    int guard = 0;
    while (moved && ++guard < 200) {
      moved = false;
      const double cand_t[2] = {std::clamp(bt + h, 0.0, 0.5 * kPi),
                                std::clamp(bt - h, 0.0, 0.5 * kPi)};
      for (const double t : cand_t) {
        const double v = value(t, bphi);
        if (v > best) {
          best = v;
          bt = t;
          moved = true;
        }
      }
      for (const double phi : {bphi + h, bphi - h}) {
        const double v = value(bt, phi);
        if (v > best) {
          best = v;
          bphi = phi;
          moved = true;
        }
      }
    }
    h *= 0.5;
  }
  return best;
}

/// Brute-force argmax of log2(1 + a p) / (mu p + p_c) over the grid
/// p in {0, step, 2 step, ...} intersected with [0, p_max].
inline double grid_stationary_power(double a, double mu, double p_c,
                                    double p_max, double step) {
  detail::check_positive(step, "grid step");
  double best_p = 0.0, best_ee = 0.0;
  const auto n = static_cast<long long>(p_max / step);
  for (long long k = 1; k <= n; ++k) {
    const double p = k * step;
    const double ee = std::log2(1.0 + a * p) / (mu * p + p_c);
    if (ee > best_ee) {
      best_ee = ee;
      best_p = p;
    }
  }
  // p_max itself participates even when not on the grid.
  const double ee_cap = std::log2(1.0 + a * p_max) / (mu * p_max + p_c);
  if (ee_cap > best_ee) best_p = p_max;
  return best_p;
}

}  // namespace hmimo::oracle

#endif  // HMIMO_ORACLE_HPP
