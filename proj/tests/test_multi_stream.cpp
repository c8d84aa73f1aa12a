#include <hmimo/multi_stream.hpp>

#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include <hmimo/oracle.hpp>
#include <hmimo/rng.hpp>
#include <hmimo/siso.hpp>

namespace {

using hmimo::MatrixXcd;
using hmimo::VectorXcd;
using hmimo::cxd;

hmimo::ChannelSet random_channels(unsigned seed, int n, int m_t, int m_r) {
  hmimo::RandomStream rs(seed, "multi_stream_test", 0);
  hmimo::ChannelSet ch;
  ch.H = rs.complex_gaussian(m_t, n);
  ch.C = rs.complex_gaussian(m_r, m_t);
  ch.G = rs.complex_gaussian(n, m_r);
  ch.sigma2 = 0.5;
  return ch;
}

hmimo::PowerModel unit_power_model() {
  hmimo::PowerModel pm;
  pm.mu = 1.0;
  pm.per_chain_static_tx = 0.5;
  pm.per_chain_static_rx = 0.5;
  return pm;
}

MatrixXcd random_covariance(unsigned seed, int n, double trace) {
  hmimo::RandomStream rs(seed, "multi_stream_test_cov", 0);
  const MatrixXcd v = rs.complex_gaussian(n, n);
  MatrixXcd q = v * v.adjoint();
  q *= trace / q.trace().real();
  return q;
}

VectorXcd random_phases(unsigned seed, int m) {
  hmimo::RandomStream rs(seed, "multi_stream_test_phase", 0);
  VectorXcd g(m);
  for (int i = 0; i < m; ++i) {
    const cxd z = rs.complex_normal();
    g[i] = std::abs(z) > 0.0 ? z / std::abs(z) : cxd(1.0, 0.0);
  }
  return g;
}

double direct_logdet_bits(const MatrixXcd& w) {
  return std::log2(std::abs(w.determinant()));
}

void expect_nondecreasing(const std::vector<double>& trace, const char* what) {
  for (std::size_t k = 1; k < trace.size(); ++k) {
    EXPECT_GE(trace[k], trace[k - 1] - 1e-9 * std::max(1.0, std::abs(trace[k])))
        << what << " decreased at step " << k;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Subproblem builders
// ---------------------------------------------------------------------------

TEST(BuildGammaRSubproblem, ZeroCovarianceIsDegenerate) {
  const auto ch = random_channels(1, 2, 3, 4);
  const auto sp = hmimo::build_gamma_r_subproblem(
      ch, hmimo::SurfaceState::all_ones(3), MatrixXcd::Zero(2, 2), ch.sigma2);
  EXPECT_EQ(sp.weights.size(), 0);
  EXPECT_EQ(sp.trace_bound, 0.0);
}

TEST(BuildGammaRSubproblem, RankOneCovarianceKeepsOneWeight) {
  const auto ch = random_channels(2, 3, 4, 5);
  hmimo::RandomStream rs(5, "multi_stream_test", 1);
  const VectorXcd q = rs.complex_gaussian(3, 1);
  const MatrixXcd cov = 2.0 * q * q.adjoint();
  const auto sp = hmimo::build_gamma_r_subproblem(
      ch, hmimo::SurfaceState::all_ones(4), cov, ch.sigma2);
  ASSERT_EQ(sp.weights.size(), 1);
  EXPECT_NEAR(sp.weights[0], sp.trace_bound, 1e-9 * sp.trace_bound);
  // The budget matrix of a rank-one incident field is the eigenvalue times
  // the squared-magnitude profile of its eigenvector.
  const VectorXcd z3q = ch.C * (ch.H * q);
  const VectorXcd u = z3q / z3q.norm();
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(std::real(sp.trace_matrix(i, i)),
                sp.weights[0] * std::norm(u[i]), 1e-9 * sp.trace_bound);
  }
}

TEST(BuildGammaRSubproblem, DecomposedFormsMatchTheDirectOnes) {
  const auto ch = random_channels(3, 2, 3, 4);
  const MatrixXcd cov = random_covariance(3, 2, 1.7);
  const auto gt = hmimo::SurfaceState(random_phases(3, 3));
  const auto sp = hmimo::build_gamma_r_subproblem(ch, gt, cov, ch.sigma2);

  hmimo::RandomStream rs(9, "multi_stream_test", 2);
  const VectorXcd g = rs.complex_gaussian(4, 1);
  const MatrixXcd z3 = ch.C * gt.as_diagonal() * ch.H;
  const MatrixXcd b = z3 * cov * z3.adjoint();
  const MatrixXcd gr = g.asDiagonal();
  const MatrixXcd w = MatrixXcd::Identity(2, 2) +
                      (ch.G * gr * b * gr.adjoint() * ch.G.adjoint()) / ch.sigma2;
  EXPECT_NEAR(hmimo::surface_objective_bits(sp, g), direct_logdet_bits(w),
              1e-9 * std::max(1.0, direct_logdet_bits(w)));
  const double direct_trace = (gr * b * gr.adjoint()).trace().real();
  EXPECT_NEAR(std::real(g.dot(sp.trace_matrix * g)), direct_trace,
              1e-9 * std::max(1.0, direct_trace));
}

TEST(BuildGammaTSubproblem, PairMatricesReproduceDownstreamPowers) {
  const auto ch = random_channels(4, 2, 4, 3);
  const MatrixXcd cov = random_covariance(4, 2, 2.4);
  const auto gamma_r = hmimo::SurfaceState(0.8 * random_phases(4, 3));
  const auto sp = hmimo::build_gamma_t_subproblem(ch, gamma_r, cov, ch.sigma2);
  ASSERT_TRUE(sp.extra_trace_pair.has_value());

  hmimo::RandomStream rs(10, "multi_stream_test", 3);
  const VectorXcd g = rs.complex_gaussian(4, 1);
  const MatrixXcd gt = g.asDiagonal();
  const MatrixXcd a = ch.H * cov * ch.H.adjoint();
  const MatrixXcd z = gamma_r.as_diagonal() * ch.C;
  const double reflected = (z * gt * a * gt.adjoint() * z.adjoint()).trace().real();
  const double incident =
      (ch.C * gt * a * gt.adjoint() * ch.C.adjoint()).trace().real();
  EXPECT_NEAR(std::real(g.dot(sp.extra_trace_pair->first * g)), reflected,
              1e-9 * std::max(1.0, reflected));
  EXPECT_NEAR(std::real(g.dot(sp.extra_trace_pair->second * g)), incident,
              1e-9 * std::max(1.0, incident));
  EXPECT_LT((sp.extra_trace_pair->first -
             sp.extra_trace_pair->first.adjoint()).norm(),
            1e-12 * sp.extra_trace_pair->first.norm());
}

TEST(BuildGammaTSubproblem, IdentityReceiveSurfaceMakesThePairVacuous) {
  const auto ch = random_channels(5, 2, 3, 4);
  const MatrixXcd cov = random_covariance(5, 2, 1.0);
  const auto sp = hmimo::build_gamma_t_subproblem(
      ch, hmimo::SurfaceState::all_ones(4), cov, ch.sigma2);
  ASSERT_TRUE(sp.extra_trace_pair.has_value());
  const double scale = sp.extra_trace_pair->second.norm();
  EXPECT_LT((sp.extra_trace_pair->first - sp.extra_trace_pair->second).norm(),
            1e-12 * std::max(scale, 1e-300));
}

// ---------------------------------------------------------------------------
// Surface optimization
// ---------------------------------------------------------------------------

TEST(OptimizeGammaR, ScalarSurfaceReflectsFully) {
  const auto ch = random_channels(6, 2, 3, 1);
  const MatrixXcd cov = random_covariance(6, 2, 1.5);
  const auto sp = hmimo::build_gamma_r_subproblem(
      ch, hmimo::SurfaceState::all_ones(3), cov, ch.sigma2);
  const auto [gamma, rep] =
      hmimo::optimize_gamma_r(sp, VectorXcd::Constant(1, cxd(0.4, 0.3)));
  EXPECT_NEAR(std::abs(gamma.gamma(0)), 1.0, 1e-9);
  expect_nondecreasing(rep.objective_trace, "scalar receive-surface rate");
}

TEST(OptimizeGammaR, StartingFromAllOnesNeverDecreasesTheRate) {
  for (unsigned seed : {11u, 12u, 13u, 14u, 15u}) {
    const auto ch = random_channels(seed, 2, 3, 4);
    const MatrixXcd cov = random_covariance(seed, 2, 2.0);
    const auto sp = hmimo::build_gamma_r_subproblem(
        ch, hmimo::SurfaceState::all_ones(3), cov, ch.sigma2);
    const VectorXcd ones = VectorXcd::Ones(4);
    const auto [gamma, rep] = hmimo::optimize_gamma_r(sp, ones);
    expect_nondecreasing(rep.objective_trace, "receive-surface rate");
    EXPECT_GE(hmimo::surface_objective_bits(sp, gamma.gamma),
              hmimo::surface_objective_bits(sp, ones) - 1e-12)
        << "seed " << seed;
    EXPECT_LE(rep.constraint_residuals[0], 1e-8) << "seed " << seed;
  }
}

TEST(OptimizeGammaR, MatchesTheBoundaryGridOracle) {
  for (unsigned seed : {21u, 22u, 23u}) {
    const auto ch = random_channels(seed, 2, 3, 2);
    const MatrixXcd cov = random_covariance(seed + 100, 2, 3.0);
    const auto sp = hmimo::build_gamma_r_subproblem(
        ch, hmimo::SurfaceState::all_ones(3), cov, ch.sigma2);
    const auto [gamma, rep] = hmimo::optimize_gamma_r(sp, VectorXcd::Ones(2));
    const double found = hmimo::surface_objective_bits(sp, gamma.gamma);
    const double reference = hmimo::oracle::grid_surface_oracle(sp);
    EXPECT_NEAR(found, reference, 1e-3 * std::max(1.0, std::abs(reference)))
        << "seed " << seed;
  }
}

TEST(OptimizeGammaR, LiftedIterateCollapsesToRankOne) {
  const auto ch = random_channels(31, 2, 4, 4);
  const MatrixXcd cov = random_covariance(31, 2, 2.0);
  const auto sp = hmimo::build_gamma_r_subproblem(
      ch, hmimo::SurfaceState::all_ones(4), cov, ch.sigma2);
  MatrixXcd lifted;
  double ratio = -1.0;
  const auto [gamma, rep] =
      hmimo::optimize_gamma_r(sp, VectorXcd::Ones(4), {}, &lifted, &ratio);
  EXPECT_LE(ratio, 1e-6);
  // The lifted iterate must dominate the rank-one recovery in the PSD order.
  const MatrixXcd gap = lifted - gamma.gamma * gamma.gamma.adjoint();
  const hmimo::HermitianEigen eig =
      hmimo::hermitian_eig(0.5 * (gap + gap.adjoint()));
  EXPECT_GE(eig.eigenvalues.minCoeff(),
            -1e-8 * std::max(1.0, lifted.norm()));
}

TEST(OptimizeGammaR, RejectsAnInfeasibleStart) {
  const auto ch = random_channels(32, 2, 3, 4);
  const MatrixXcd cov = random_covariance(32, 2, 2.0);
  const auto sp = hmimo::build_gamma_r_subproblem(
      ch, hmimo::SurfaceState::all_ones(3), cov, ch.sigma2);
  EXPECT_THROW(hmimo::optimize_gamma_r(sp, 3.0 * VectorXcd::Ones(4)),
               hmimo::model_error);
  EXPECT_THROW(hmimo::optimize_gamma_r(sp, VectorXcd::Ones(2)),
               hmimo::dimension_error);
}

TEST(OptimizeGammaT, ScalarSurfaceReflectsFully) {
  const auto ch = random_channels(7, 2, 1, 4);
  const MatrixXcd cov = random_covariance(7, 2, 1.5);
  const auto gamma_r = hmimo::SurfaceState(0.9 * random_phases(7, 4));
  const auto [gamma, rep] = hmimo::optimize_gamma_t(
      ch, gamma_r, cov, VectorXcd::Constant(1, cxd(0.7, -0.1)));
  EXPECT_NEAR(std::abs(gamma.gamma(0)), 1.0, 1e-9);
}

TEST(OptimizeGammaT, MonotoneAndFeasibleAcrossSeeds) {
  for (unsigned seed : {41u, 42u, 43u, 44u, 45u}) {
    const auto ch = random_channels(seed, 2, 4, 3);
    const MatrixXcd cov = random_covariance(seed, 2, 2.0);
    // A bounded-magnitude receive surface keeps the downstream budget
    // satisfiable at the all-ones transmit start.
    const auto gamma_r = hmimo::SurfaceState(0.8 * random_phases(seed, 3));
    const auto [gamma, rep] =
        hmimo::optimize_gamma_t(ch, gamma_r, cov, VectorXcd::Ones(4));
    expect_nondecreasing(rep.objective_trace, "transmit-surface rate");
    EXPECT_LE(rep.constraint_residuals[0], 1e-8) << "seed " << seed;
    EXPECT_LE(rep.constraint_residuals[1], 1e-8) << "seed " << seed;
  }
}

TEST(OptimizeGammaT, MatchesTheBoundaryGridOracle) {
  for (unsigned seed : {51u, 52u, 53u}) {
    const auto ch = random_channels(seed, 2, 2, 3);
    const MatrixXcd cov = random_covariance(seed + 200, 2, 2.5);
    const auto gamma_r = hmimo::SurfaceState(0.75 * random_phases(seed, 3));
    const auto sp =
        hmimo::build_gamma_t_subproblem(ch, gamma_r, cov, ch.sigma2);
    const auto [gamma, rep] =
        hmimo::optimize_gamma_t(ch, gamma_r, cov, VectorXcd::Ones(2));
    const double found = hmimo::surface_objective_bits(sp, gamma.gamma);
    const double reference = hmimo::oracle::grid_surface_oracle(sp);
    EXPECT_NEAR(found, reference, 1e-3 * std::max(1.0, std::abs(reference)))
        << "seed " << seed;
  }
}

// ---------------------------------------------------------------------------
// Covariance step
// ---------------------------------------------------------------------------

TEST(OptimizeQ, UnitModulusSurfacesReduceToWaterFilling) {
  for (unsigned seed : {61u, 62u, 63u}) {
    const auto ch = random_channels(seed, 3, 4, 5);
    const auto pm = unit_power_model();
    const auto gt = hmimo::SurfaceState(random_phases(seed, 4));
    const auto gr = hmimo::SurfaceState(random_phases(seed + 1, 5));
    const double p_max = 5.0;
    const auto [q, rep] =
        hmimo::optimize_Q(ch, gt, gr, pm, p_max, hmimo::OptimizeMode::Capacity);
    const MatrixXcd t = hmimo::composite_channel(ch, gt, gr);
    const auto wf =
        hmimo::oracle::water_filling(t.adjoint() * t / ch.sigma2, p_max);
    const double got = hmimo::capacity(ch, gt, gr,
                                       hmimo::TransmitState::covariance(q), 1.0);
    EXPECT_NEAR(got, wf.capacity_bits, 1e-4) << "seed " << seed;
    EXPECT_LE(q.trace().real(), p_max * (1.0 + 1e-8));
  }
}

TEST(OptimizeQ, DeadChannelGivesZeroCovariance) {
  auto ch = random_channels(64, 2, 3, 4);
  ch.G.setZero();
  const auto pm = unit_power_model();
  const auto [q, rep] =
      hmimo::optimize_Q(ch, hmimo::SurfaceState::all_ones(3),
                        hmimo::SurfaceState::all_ones(4), pm, 2.0);
  EXPECT_EQ(q.norm(), 0.0);
  EXPECT_EQ(rep.termination, hmimo::Termination::Converged);
}

TEST(OptimizeQ, StaticPowerExtremesSteerTheRadiatedPower) {
  const auto ch = random_channels(65, 1, 3, 4);
  const auto gt = hmimo::SurfaceState::all_ones(3);
  const auto gr = hmimo::SurfaceState::all_ones(4);
  const double p_max = 50.0;
  const MatrixXcd t = hmimo::composite_channel(ch, gt, gr);
  const double a = t.squaredNorm() / ch.sigma2;

  hmimo::PowerModel heavy = unit_power_model();
  heavy.system_overhead = 1e6;
  const auto [q_full, rep_full] = hmimo::optimize_Q(ch, gt, gr, heavy, p_max);
  EXPECT_NEAR(q_full.trace().real(), p_max, 1e-5 * p_max);

  hmimo::PowerModel light = unit_power_model();
  light.per_chain_static_tx = 1e-6;
  light.per_chain_static_rx = 1e-6;
  const double p_c =
      hmimo::static_power(light, 1, 1, 3, 4);
  const double p_star = hmimo::optimize_power_siso(a, light.mu, p_c, p_max);
  ASSERT_LT(p_star, 0.9 * p_max);  // the optimum is interior here
  const auto [q_trim, rep_trim] = hmimo::optimize_Q(ch, gt, gr, light, p_max);
  // The ratio objective is flat in the argument near the optimum, so the
  // radiated power matches loosely while the efficiency value matches tight.
  const double p_got = q_trim.trace().real();
  EXPECT_NEAR(p_got, p_star, 1e-3 * std::max(p_star, 1e-12));
  const double ee_ref = std::log2(1.0 + a * p_star) / (light.mu * p_star + p_c);
  const double ee_got = std::log2(1.0 + a * p_got) / (light.mu * p_got + p_c);
  EXPECT_NEAR(ee_got, ee_ref, 1e-7 * ee_ref);
  EXPECT_LE(rep_trim.certificate, 1e-8);
}

TEST(OptimizeQ, RespectsBothReflectionBudgetsWhenTheyBind) {
  for (unsigned seed : {71u, 72u}) {
    const auto ch = random_channels(seed, 2, 4, 3);
    const auto pm = unit_power_model();
    // Mixed magnitudes make the reflected-power rows genuine constraints.
    hmimo::RandomStream rs(seed, "multi_stream_test_mix", 0);
    VectorXcd gt_coef = random_phases(seed + 2, 4);
    VectorXcd gr_coef = random_phases(seed + 3, 3);
    for (int i = 0; i < 4; ++i) gt_coef[i] *= 0.6 + 0.2 * i;
    for (int i = 0; i < 3; ++i) gr_coef[i] *= 1.2 - 0.25 * i;
    const auto gt = hmimo::SurfaceState(gt_coef);
    const auto gr = hmimo::SurfaceState(gr_coef);
    const auto [q, rep] = hmimo::optimize_Q(ch, gt, gr, pm, 3.0);
    const auto rc = hmimo::check_reflection(ch, gt, gr,
                                            hmimo::TransmitState::covariance(q));
    EXPECT_TRUE(rc.feasible) << "seed " << seed;
    EXPECT_LE(rc.tx_residual, 1e-8);
    EXPECT_LE(rc.rx_residual, 1e-8);
    EXPECT_LE(q.trace().real(), 3.0 * (1.0 + 1e-8));
    const hmimo::HermitianEigen eig =
        hmimo::hermitian_eig(0.5 * (q + q.adjoint()));
    EXPECT_GE(eig.eigenvalues.minCoeff(), -1e-9 * std::max(1.0, q.norm()));
  }
}

// ---------------------------------------------------------------------------
// Alternating outer loop
// ---------------------------------------------------------------------------

TEST(AlternateMultiStream, ScalarLinkMatchesTheClosedForm) {
  for (unsigned seed : {81u, 82u, 83u}) {
    const auto ch = random_channels(seed, 1, 2, 2);
    const auto pm = unit_power_model();
    const double p_max = 4.0;
    const auto reference = hmimo::solve_siso(ch, pm, p_max);
    const auto sol = hmimo::alternate_multi_stream(ch, pm, p_max);
    EXPECT_NEAR(sol.ee_bits_per_joule, reference.ee_bits_per_joule,
                1e-4 * reference.ee_bits_per_joule)
        << "seed " << seed;
  }
}

TEST(AlternateMultiStream, OuterTraceIsMonotoneAndFeasible) {
  for (unsigned seed : {91u, 92u, 93u}) {
    const auto ch = random_channels(seed, 2, 4, 4);
    const auto pm = unit_power_model();
    const auto sol = hmimo::alternate_multi_stream(ch, pm, 3.0);
    expect_nondecreasing(sol.report.objective_trace, "outer energy efficiency");
    EXPECT_EQ(sol.report.termination, hmimo::Termination::Converged)
        << "seed " << seed;
    EXPECT_LE(sol.rank_ratio_t, 1e-6);
    EXPECT_LE(sol.rank_ratio_r, 1e-6);
    const auto rc = hmimo::check_reflection(
        ch, sol.gamma_t, sol.gamma_r, hmimo::TransmitState::covariance(sol.q));
    EXPECT_TRUE(rc.feasible) << "seed " << seed;
    EXPECT_LE(sol.q.trace().real(), 3.0 * (1.0 + 1e-8));
    EXPECT_GT(sol.ee_bits_per_joule, 0.0);
  }
}

TEST(AlternateMultiStream, CapacityModeSpendsTheFullBudget) {
  const auto ch = random_channels(95, 2, 4, 4);
  const auto pm = unit_power_model();
  const double p_max = 2.5;
  const auto sol = hmimo::alternate_multi_stream(
      ch, pm, p_max, hmimo::OptimizeMode::Capacity);
  expect_nondecreasing(sol.report.objective_trace, "outer capacity");
  EXPECT_NEAR(sol.q.trace().real(), p_max, 1e-6 * p_max);
  EXPECT_GT(sol.capacity_bps, 0.0);
}

TEST(AlternateMultiStream, ImprovesOnTheInitialConfiguration) {
  const auto ch = random_channels(96, 2, 4, 4);
  const auto pm = unit_power_model();
  const double p_max = 3.0;
  const auto q0 = MatrixXcd((p_max / 2.0) * MatrixXcd::Identity(2, 2));
  const double start_ee = hmimo::energy_efficiency(
      hmimo::capacity(ch, hmimo::SurfaceState::all_ones(4),
                      hmimo::SurfaceState::all_ones(4),
                      hmimo::TransmitState::covariance(q0), 1.0),
      hmimo::total_power(pm, ch, hmimo::TransmitState::covariance(q0)));
  const auto sol = hmimo::alternate_multi_stream(ch, pm, p_max);
  EXPECT_GE(sol.ee_bits_per_joule, start_ee * (1.0 - 1e-9));
}
