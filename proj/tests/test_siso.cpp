// SPDX-License-Identifier: Apache-2.0
// Tests for the closed-form single-antenna solver and the shared rank-one
// surface design.

#include "hmimo/siso.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "hmimo/channel.hpp"
#include "hmimo/linalg.hpp"
#include "hmimo/oracle.hpp"
#include "hmimo/power.hpp"
#include "hmimo/rng.hpp"

namespace {

using hmimo::cxd;
using hmimo::MatrixXcd;
using hmimo::VectorXcd;

hmimo::ChannelSet random_channels(uint64_t seed, int n, int m) {
  hmimo::RandomStream rh(seed, "h"), rc(seed, "c"), rg(seed, "g");
  hmimo::ChannelSet ch;
  ch.H = MatrixXcd(m, n);
  ch.C = MatrixXcd(m, m);
  ch.G = MatrixXcd(n, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) ch.H(i, j) = rh.complex_normal();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) ch.C(i, j) = rc.complex_normal();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) ch.G(i, j) = rg.complex_normal();
  ch.sigma2 = 0.5;
  return ch;
}

hmimo::PowerModel unit_power_model() {
  hmimo::PowerModel pm;
  pm.mu = 1.0;
  pm.per_element_static_tx = 0.01;
  pm.per_element_static_rx = 0.01;
  pm.per_chain_static_tx = 0.2;
  pm.per_chain_static_rx = 0.2;
  pm.surface_overhead = 0.0;
  pm.system_overhead = 0.5;
  return pm;
}

// ---------------------------------------------------------------------------
// optimize_power_siso
// ---------------------------------------------------------------------------

TEST(OptimizePowerSiso, UnitParametersGiveEMinusOne) {
  const double p = hmimo::optimize_power_siso(1.0, 1.0, 1.0, 10.0);
  EXPECT_NEAR(p, std::exp(1.0) - 1.0, 1e-9);
}

TEST(OptimizePowerSiso, BudgetBindsWhenStationaryPointIsBeyondIt) {
  // Stationary point is e-1 ~ 1.718; cap below it.
  EXPECT_DOUBLE_EQ(hmimo::optimize_power_siso(1.0, 1.0, 1.0, 1.0), 1.0);
  // Zero amplifier slope: the ratio increases in p.
  EXPECT_DOUBLE_EQ(hmimo::optimize_power_siso(2.0, 0.0, 1.0, 3.0), 3.0);
}

TEST(OptimizePowerSiso, DegenerateInputs) {
  EXPECT_DOUBLE_EQ(hmimo::optimize_power_siso(0.0, 1.0, 1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(hmimo::optimize_power_siso(1.0, 1.0, 0.0, 1.0), 0.0);
  EXPECT_THROW(hmimo::optimize_power_siso(1.0, 1.0, 1.0, 0.0),
               hmimo::model_error);
  EXPECT_THROW(hmimo::optimize_power_siso(-1.0, 1.0, 1.0, 1.0),
               hmimo::model_error);
}

TEST(OptimizePowerSiso, MatchesFineGrid) {
  hmimo::RandomStream rs(7, "triples");
  for (int k = 0; k < 8; ++k) {
    const double a = 0.2 + 5.0 * rs.uniform01();
    const double mu = 0.3 + 2.0 * rs.uniform01();
    const double p_c = 0.2 + 3.0 * rs.uniform01();
    const double p_max = 0.5 + 2.0 * rs.uniform01();
    const double p = hmimo::optimize_power_siso(a, mu, p_c, p_max);
    const double p_grid =
        hmimo::oracle::grid_stationary_power(a, mu, p_c, p_max, 1e-6);
    EXPECT_NEAR(p, p_grid, 2e-6) << "triple " << k;
  }
}

// ---------------------------------------------------------------------------
// solve_siso
// ---------------------------------------------------------------------------

TEST(SolveSiso, GainMatchesSpectralIdentity) {
  for (uint64_t seed : {1u, 2u, 3u, 4u}) {
    const auto ch = random_channels(seed, 1, 8);
    const auto sol =
        hmimo::solve_siso(ch, unit_power_model(), 1.0);
    const auto [lam_c, u_c] =
        hmimo::principal_eigpair(MatrixXcd(ch.C * ch.C.adjoint()));
    const double expect = lam_c * ch.H.col(0).squaredNorm() *
                          ch.G.row(0).squaredNorm() / ch.sigma2;
    EXPECT_NEAR(sol.effective_gain, expect, 1e-10 * expect);
  }
}

TEST(SolveSiso, ReflectionConstraintsHoldWithEquality) {
  const auto ch = random_channels(11, 1, 8);
  const auto sol = hmimo::solve_siso(ch, unit_power_model(), 1.0);
  const auto tx = hmimo::TransmitState::scalar_power(sol.power);
  const auto sp = hmimo::surface_powers(ch, sol.gamma_t, sol.gamma_r, tx);
  EXPECT_NEAR(sp.reflected_tx, sp.incident_tx, 1e-9 * sp.incident_tx);
  EXPECT_NEAR(sp.reflected_rx, sp.incident_rx, 1e-9 * sp.incident_rx);
  const auto rc = hmimo::check_reflection(ch, sol.gamma_t, sol.gamma_r, tx);
  EXPECT_TRUE(rc.feasible);
}

TEST(SolveSiso, DominatesRandomSearch) {
  const auto pm = unit_power_model();
  for (uint64_t seed : {21u, 22u, 23u}) {
    const auto ch = random_channels(seed, 1, 4);
    const auto sol = hmimo::solve_siso(ch, pm, 1.0);
    const auto rs =
        hmimo::oracle::random_search_siso(ch, pm, 1.0, 20000, 400, seed);
    EXPECT_GE(sol.ee_bits_per_joule - rs.best_ee, -1e-9) << "seed " << seed;
    EXPECT_GE(sol.effective_gain - rs.best_gain, -1e-9 * sol.effective_gain);
  }
}

TEST(SolveSiso, CapacityModeSpendsTheFullBudget) {
  const auto ch = random_channels(31, 1, 6);
  const auto sol = hmimo::solve_siso(ch, unit_power_model(), 0.7,
                                     hmimo::OptimizeMode::Capacity);
  EXPECT_DOUBLE_EQ(sol.power, 0.7);
  EXPECT_NEAR(sol.capacity_bps,
              std::log2(1.0 + sol.effective_gain * 0.7), 1e-12);
}

TEST(SolveSiso, DarkElementsAreZeroed) {
  auto ch = random_channels(41, 1, 6);
  ch.H(2, 0) = 0.0;  // one dark transmit-surface element
  const auto sol = hmimo::solve_siso(ch, unit_power_model(), 1.0);
  EXPECT_EQ(sol.gamma_t.gamma[2], cxd(0.0, 0.0));
  // The remaining elements still satisfy the reflection constraints.
  const auto tx = hmimo::TransmitState::scalar_power(sol.power);
  const auto rc = hmimo::check_reflection(ch, sol.gamma_t, sol.gamma_r, tx);
  EXPECT_TRUE(rc.feasible);
  // The two reflection stages stay consistent: the reported gain matches
  // what the returned surfaces actually deliver through the cascade.
  const VectorXcd x =
      ch.C * sol.gamma_t.gamma.cwiseProduct(ch.H.col(0));
  const double staged =
      x.squaredNorm() * ch.G.row(0).squaredNorm() / ch.sigma2;
  EXPECT_NEAR(sol.effective_gain, staged, 1e-8 * staged);
  // A dark element removes one funnel path, so the full-matrix spectral
  // bound can no longer be met with equality -- only from below.
  const auto [lam_c, u_c] =
      hmimo::principal_eigpair(MatrixXcd(ch.C * ch.C.adjoint()));
  const double full_bound = lam_c * ch.H.col(0).squaredNorm() *
                            ch.G.row(0).squaredNorm() / ch.sigma2;
  EXPECT_LE(sol.effective_gain, full_bound * (1.0 + 1e-12));
  // The construction still beats a random search over the same channel.
  const auto rs = hmimo::oracle::random_search_siso(
      ch, unit_power_model(), 1.0, 20000, 64, 99);
  EXPECT_GE(sol.effective_gain - rs.best_gain,
            -1e-9 * sol.effective_gain);
}

TEST(SolveSiso, RejectsInvalidShapes) {
  // More transmit-surface elements than receive-surface elements.
  hmimo::ChannelSet ch;
  ch.H = MatrixXcd::Ones(4, 1);
  ch.C = MatrixXcd::Ones(2, 4);
  ch.G = MatrixXcd::Ones(1, 2);
  ch.sigma2 = 1.0;
  EXPECT_THROW(hmimo::solve_siso(ch, unit_power_model(), 1.0),
               hmimo::dimension_error);
  // Multi-antenna input is not a single-antenna problem.
  const auto mimo = random_channels(5, 2, 4);
  EXPECT_THROW(hmimo::solve_siso(mimo, unit_power_model(), 1.0),
               hmimo::dimension_error);
}

// ---------------------------------------------------------------------------
// optimize_surfaces_rank1 with a true beam
// ---------------------------------------------------------------------------

TEST(OptimizeSurfacesRank1, AchievesSpectralGainForFixedBeam) {
  const auto ch = random_channels(51, 2, 8);
  hmimo::RandomStream rq(51, "beam");
  VectorXcd q(2);
  q << rq.complex_normal(), rq.complex_normal();
  q *= std::sqrt(0.5) / q.norm();

  const auto [gt, gr] = hmimo::optimize_surfaces_rank1(ch, q);
  const MatrixXcd t = hmimo::composite_channel(ch, gt, gr);
  const double snr = (t * q).squaredNorm() / ch.sigma2;

  const auto [lam_c, u_c] =
      hmimo::principal_eigpair(MatrixXcd(ch.C * ch.C.adjoint()));
  const auto [lam_g, u_g] =
      hmimo::principal_eigpair(MatrixXcd(ch.G.adjoint() * ch.G));
  const double expect =
      lam_c * lam_g * (ch.H * q).squaredNorm() / ch.sigma2;
  EXPECT_NEAR(snr, expect, 1e-9 * expect);

  const auto tx = hmimo::TransmitState::beamvector(q);
  const auto rc = hmimo::check_reflection(ch, gt, gr, tx);
  EXPECT_TRUE(rc.feasible);
  EXPECT_NEAR(rc.powers.reflected_tx, rc.powers.incident_tx,
              1e-9 * rc.powers.incident_tx);
}

}  // namespace
