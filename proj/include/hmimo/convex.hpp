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

#ifndef HMIMO_CONVEX_HPP
#define HMIMO_CONVEX_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "hmimo/barrier.hpp"
#include "hmimo/common.hpp"
#include "hmimo/convex_types.hpp"
#include "hmimo/linalg.hpp"

namespace hmimo {

// ---------------------------------------------------------------------------
// Dinkelbach driver for concave/convex fractional programs
// ---------------------------------------------------------------------------

/// max num(x) / den(x) over a convex feasible set, with num concave, den
/// convex and strictly positive.  The feasible set is represented by the
/// `maximize_shifted` callback, which returns an (approximate) maximizer of
/// num(x) - eta * den(x) warm-started at the incumbent.
template <typename State>
struct FractionalProblem {
  std::function<double(const State&)> numerator;
  std::function<double(const State&)> denominator;
  std::function<State(double eta, const State& warm, SolveReport* inner)>
      maximize_shifted;
};

template <typename State>
std::pair<State, SolveReport> dinkelbach(const FractionalProblem<State>& fp,
                                         State x0,
                                         const SolverOptions& opts = {}) {
  SolveReport rep;
  State x = std::move(x0);
  double num = fp.numerator(x);
  double den = fp.denominator(x);
  if (!(den > 0.0))
    throw model_error("dinkelbach: denominator must be positive at the start");
  double eta = num / den;
  rep.objective_trace.push_back(eta);
  rep.termination = Termination::MaxIters;
  for (int k = 0; k < opts.max_iters; ++k) {
    ++rep.iterations;
    SolveReport inner;
    State cand = fp.maximize_shifted(eta, x, &inner);
    rep.kkt_residual = inner.kkt_residual;
    const double f_cand = fp.numerator(cand) - eta * fp.denominator(cand);
    const double f_inc = num - eta * den;  // zero up to rounding
    // Adopt the candidate only when it certifies at least the incumbent's
    // shifted objective, so the ratio trace stays nondecreasing even under
    // an inexact inner solve.  The convergence certificate always comes from
    // the candidate: it lower-bounds max F(eta), so a small |F| is meaningful.
    if (f_cand >= f_inc) {
      x = std::move(cand);
      num = fp.numerator(x);
      den = fp.denominator(x);
      if (!(den > 0.0))
        throw model_error("dinkelbach: denominator lost positivity");
    }
    eta = num / den;
    rep.objective_trace.push_back(eta);
    rep.certificate = std::abs(f_cand);
    if (std::abs(f_cand) <= opts.obj_tol) {
      rep.termination = Termination::Converged;
      break;
    }
  }
  return {std::move(x), std::move(rep)};
}

// ---------------------------------------------------------------------------
// Determinant maximization over a Hermitian PSD unknown
// ---------------------------------------------------------------------------

/// One log-det contribution: weight/noise * map X map^H enters the identity-
/// plus-sum determinant.
struct MaxDetTerm {
  double weight = 1.0;
  MatrixXcd map;
};

/// Re tr(d X) <= bound.  `scale` is the magnitude against which degeneracy
/// and residuals are judged; 0 selects ||d||_F.
struct TraceConstraint {
  MatrixXcd d;
  double bound = 0.0;
  double scale = 0.0;
};

/// Couples X with a vector unknown through [[X, gamma], [gamma^H, 1]] >= 0
/// and the linearized movement bound around `anchor`:
///   h(X, gamma) = tr(X) + ||anchor||^2 - 2 Re{anchor^H gamma} >= ||gamma -
///   anchor||^2 + (tr(X) - ||gamma||^2) >= 0.
/// penalty > 0 subtracts penalty * h from the objective in a single solve;
/// penalty <= 0 drives h to zero by penalty continuation.
struct LmiLink {
  VectorXcd anchor;
  double penalty = 0.0;
};

struct MaxDetProblem {
  int dim = 0;      // side of the Hermitian unknown
  double noise = 1.0;  // divides every term weight
  std::vector<MaxDetTerm> terms;
  std::vector<TraceConstraint> trace_constraints;
  std::optional<LmiLink> link;
  MatrixXcd linear;      // objective += Re tr(linear X), in bits (0x0 = none)
  double trace_box = 0.0;  // optional hard cap tr(X) <= trace_box (0 = none)
};

struct MaxDetSolution {
  MatrixXcd x;
  VectorXcd gamma;  // empty unless the problem carries a link
  double objective_bits = 0.0;
  double penalty_residual = 0.0;  // h(X, gamma) at exit when linked
  SolveReport report;
};

/// log2 det(I + sum_k w_k/noise * map_k X map_k^H) + Re tr(linear X).
inline double maxdet_objective_bits(const MaxDetProblem& pb,
                                    const MatrixXcd& x) {
  double bits = 0.0;
  if (!pb.terms.empty()) {
    const int rows = static_cast<int>(pb.terms[0].map.rows());
    MatrixXcd w = MatrixXcd::Identity(rows, rows);
    for (const auto& t : pb.terms)
      w.noalias() += (t.weight / pb.noise) * t.map * x * t.map.adjoint();
    bits = logdet_psd(0.5 * (w + w.adjoint()), "maxdet objective");
  }
  if (pb.linear.size() > 0) bits += (pb.linear * x).trace().real();
  return bits;
}

namespace detail {

struct MaxDetWorkspace {
  HermIndexer hx;
  ComplexVecIndexer vx;  // valid only when linked
  bool linked = false;
  int n = 0;
  std::vector<VectorXd> affine_a;  // kept trace constraints (+ trace box)
  std::vector<double> affine_b;
  std::vector<double> affine_scale;
  std::vector<int> kept_constraints;  // indices into pb.trace_constraints
};

inline MaxDetWorkspace make_maxdet_workspace(const MaxDetProblem& pb) {
  if (pb.dim <= 0) throw dimension_error("solve_maxdet: dim must be positive");
  MaxDetWorkspace ws;
  ws.linked = pb.link.has_value();
  ws.hx = HermIndexer(0, pb.dim);
  ws.n = ws.hx.size();
  if (ws.linked) {
    if (static_cast<int>(pb.link->anchor.size()) != pb.dim)
      throw dimension_error("solve_maxdet: anchor dimension mismatch");
    ws.vx = ComplexVecIndexer(ws.n, pb.dim);
    ws.n += ws.vx.size();
  }
  for (std::size_t k = 0; k < pb.trace_constraints.size(); ++k) {
    const auto& tc = pb.trace_constraints[k];
    if (tc.d.rows() != pb.dim || tc.d.cols() != pb.dim)
      throw dimension_error("solve_maxdet: trace constraint dimension");
    const double dnorm = tc.d.norm();
    const double scale = tc.scale > 0.0 ? tc.scale : std::max(dnorm, 1.0);
    // A coefficient matrix that vanishes relative to its reference scale is
    // a numerically degenerate 0 <= 0 statement; keeping it would pin the
    // iterate, so it is dropped.
    if (dnorm <= 1e-12 * scale) {
      if (tc.bound < -1e-12 * scale)
        throw model_error("solve_maxdet: constraint 0 <= negative bound");
      continue;
    }
    VectorXd a = VectorXd::Zero(ws.n);
    for (int loc = 0; loc < ws.hx.size(); ++loc)
      a[ws.hx.offset() + loc] = ws.hx.trace_inner(tc.d, loc);
    ws.affine_a.push_back(std::move(a));
    ws.affine_b.push_back(tc.bound);
    ws.affine_scale.push_back(scale);
    ws.kept_constraints.push_back(static_cast<int>(k));
  }
  if (pb.trace_box > 0.0) {
    VectorXd a = VectorXd::Zero(ws.n);
    for (int i = 0; i < pb.dim; ++i) a[ws.hx.offset() + i] = 1.0;
    ws.affine_a.push_back(std::move(a));
    ws.affine_b.push_back(pb.trace_box);
    ws.affine_scale.push_back(pb.trace_box);
    ws.kept_constraints.push_back(-1);
  }
  return ws;
}

/// Minimal slack across the affine rows, in units of each row's scale.
inline double affine_margin(const MaxDetWorkspace& ws, const VectorXd& z) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < ws.affine_a.size(); ++k)
    m = std::min(m,
                 (ws.affine_b[k] - ws.affine_a[k].dot(z)) / ws.affine_scale[k]);
  return m;
}

/// Builds the penalty -rho * h(X, gamma) as a linear objective term.
inline std::shared_ptr<LinearObjTerm> make_penalty_term(
    const MaxDetWorkspace& ws, const VectorXcd& anchor, double rho) {
  VectorXd l = VectorXd::Zero(ws.n);
  for (int i = 0; i < ws.hx.dim(); ++i) l[ws.hx.offset() + i] = -rho;
  for (int i = 0; i < ws.vx.dim(); ++i) {
    l[ws.vx.re_index(i)] = 2.0 * rho * anchor[i].real();
    l[ws.vx.im_index(i)] = 2.0 * rho * anchor[i].imag();
  }
  return std::make_shared<LinearObjTerm>(std::move(l),
                                         -rho * anchor.squaredNorm());
}

/// Phase-1: find z with strict affine margins, keeping the PSD blocks (which
/// must already be strict at z) hard.  Returns true on success.
inline bool maxdet_phase1(const MaxDetWorkspace& ws, const MaxDetProblem& pb,
                          VectorXd& z, const SolverOptions& opts) {
  const int n_ext = ws.n + 1;
  const int s_idx = ws.n;
  VectorXd ze = VectorXd::Zero(n_ext);
  ze.head(ws.n) = z;
  double s0 = 0.0;
  for (std::size_t k = 0; k < ws.affine_a.size(); ++k)
    s0 = std::max(s0, (ws.affine_a[k].dot(z) - ws.affine_b[k]) /
                          ws.affine_scale[k]);
  s0 += 1.0;
  ze[s_idx] = s0;

  BarrierEngine eng(n_ext);
  VectorXd obj = VectorXd::Zero(n_ext);
  obj[s_idx] = -1.0;  // maximize -s
  eng.add_objective(std::make_shared<LinearObjTerm>(obj));
  for (std::size_t k = 0; k < ws.affine_a.size(); ++k) {
    VectorXd a = VectorXd::Zero(n_ext);
    a.head(ws.n) = ws.affine_a[k];
    a[s_idx] = -ws.affine_scale[k];
    eng.add_barrier(std::make_shared<AffineBarrierTerm>(std::move(a),
                                                        ws.affine_b[k]));
  }
  {  // box the slack and the trace to keep phase-1 bounded
    VectorXd up = VectorXd::Zero(n_ext);
    up[s_idx] = 1.0;
    eng.add_barrier(std::make_shared<AffineBarrierTerm>(up, s0 + 1.0));
    VectorXd tr = VectorXd::Zero(n_ext);
    for (int i = 0; i < pb.dim; ++i) tr[ws.hx.offset() + i] = 1.0;
    double cur_tr = tr.head(ws.n).dot(z);
    eng.add_barrier(std::make_shared<AffineBarrierTerm>(
        tr, 100.0 * std::max(cur_tr, 1.0)));
  }
  // PSD structure stays hard; rebuild the dirs on the extended index space
  // (variable indices are unchanged, so the same builders apply).
  if (ws.linked)
    eng.add_barrier(PsdBarrierTerm::schur_link(ws.hx, ws.vx));
  else
    eng.add_barrier(PsdBarrierTerm::block_psd(ws.hx));

  EngineOptions eopt;
  eopt.gap_tol = 1e-6;
  eopt.newton_tol = 1e-10;
  eopt.mu = opts.barrier_mu;
  const EngineResult er = eng.minimize(ze, eopt);
  if (er.termination == Termination::Infeasible) return false;
  VectorXd cand = ze.head(ws.n);
  if (affine_margin(ws, cand) <= 1e-10) return false;
  z = cand;
  return true;
}

}  // namespace detail

inline MaxDetSolution solve_maxdet(const MaxDetProblem& pb,
                                   const MatrixXcd* warm_x = nullptr,
                                   const VectorXcd* warm_gamma = nullptr,
                                   const SolverOptions& opts = {}) {
  using namespace detail;  // NOLINT
  MaxDetWorkspace ws = make_maxdet_workspace(pb);
  const int m = pb.dim;
  const double ln2 = std::log(2.0);

  // --- starting point -----------------------------------------------------
  // Scale of an isotropic start admissible under the positive-bound rows.
  double c0 = 1.0;
  for (std::size_t k = 0; k < ws.affine_a.size(); ++k) {
    // The first m packed coordinates of the Hermitian block are its diagonal,
    // so this partial sum is tr(D_k).
    const double tr_d = ws.affine_a[k].head(m).sum();
    if (ws.affine_b[k] > 0.0 && tr_d > 0.0)
      c0 = std::min(c0, 0.25 * ws.affine_b[k] / tr_d);
  }
  c0 = std::max(c0, 1e-300);

  VectorXd z = VectorXd::Zero(ws.n);
  bool started = false;
  const MatrixXcd eye = MatrixXcd::Identity(m, m);
  std::vector<std::pair<MatrixXcd, VectorXcd>> candidates;
  if (warm_x != nullptr) {
    VectorXcd gw = (warm_gamma != nullptr) ? *warm_gamma
                                           : VectorXcd::Zero(ws.linked ? m : 0);
    // Two blend scales: the warm iterate's own trace level, and c0, which is
    // strictly admissible under every positive-bound row by construction.
    // The first keeps the blend close to a well-scaled warm point; only the
    // second survives when the warm iterate sits on a constraint boundary.
    const double base_warm = std::max(warm_x->trace().real() / m, c0);
    for (double base : {base_warm, c0}) {
      // Larger rungs first: they start Newton well inside the cone.  The
      // trailing hair-thin rungs only admit warm anchors whose strict
      // interior is a sliver (pinned re-solves anchored on an active
      // boundary), where no better start exists.
      for (double delta : {1e-4, 1e-2, 0.1, 0.3, 0.7, 1.0, 1e-6, 1e-8}) {
        candidates.emplace_back(
            (1.0 - delta) * (*warm_x) + delta * base * eye,
            ws.linked ? VectorXcd(std::sqrt(1.0 - delta) * gw) : VectorXcd());
      }
      if (base_warm == c0) break;
    }
  }
  for (double shrink : {1.0, 1e-2, 1e-4})
    candidates.emplace_back(shrink * c0 * eye,
                            ws.linked ? VectorXcd(VectorXcd::Zero(m))
                                      : VectorXcd());
  for (const auto& [xc, gc] : candidates) {
    VectorXd zc = VectorXd::Zero(ws.n);
    ws.hx.pack(xc, zc);
    if (ws.linked) ws.vx.pack(gc, zc);
    // Strictness: positive affine margin plus PSD feasibility.
    if (affine_margin(ws, zc) <= 1e-9) continue;
    auto psd = ws.linked ? PsdBarrierTerm::schur_link(ws.hx, ws.vx)
                         : PsdBarrierTerm::block_psd(ws.hx);
    if (!psd->prepare(zc)) continue;
    z = zc;
    started = true;
    break;
  }
  if (!started) {
    // Fall back to phase-1 from a PSD-strict isotropic point.
    ws.hx.pack(c0 * eye, z);
    if (ws.linked) ws.vx.pack(VectorXcd::Zero(m), z);
    if (!maxdet_phase1(ws, pb, z, opts))
      throw solver_error("solve_maxdet: no strictly feasible point found");
  }

  // --- main solve (with penalty continuation when linked) ------------------
  MaxDetSolution sol;
  sol.report.termination = Termination::Converged;
  const bool enforce = ws.linked && pb.link->penalty <= 0.0;
  double rho = ws.linked ? (enforce ? 1.0 : pb.link->penalty) : 0.0;
  double warm_t = 0.0;
  const int rounds = enforce ? 16 : 1;
  EngineResult er;
  for (int round = 0; round < rounds; ++round) {
    BarrierEngine eng(ws.n);
    std::vector<double> weights;
    std::vector<MatrixXcd> maps;
    for (const auto& t : pb.terms) {
      weights.push_back(t.weight / pb.noise);
      maps.push_back(t.map);
    }
    eng.add_objective(std::make_shared<LogDetCapTerm>(ws.hx, std::move(weights),
                                                      std::move(maps)));
    if (pb.linear.size() > 0) {
      VectorXd l = VectorXd::Zero(ws.n);
      for (int loc = 0; loc < ws.hx.size(); ++loc)
        l[ws.hx.offset() + loc] = ln2 * ws.hx.trace_inner(pb.linear, loc);
      eng.add_objective(std::make_shared<LinearObjTerm>(std::move(l)));
    }
    if (ws.linked)
      eng.add_objective(make_penalty_term(ws, pb.link->anchor, rho));
    for (std::size_t k = 0; k < ws.affine_a.size(); ++k)
      eng.add_barrier(std::make_shared<AffineBarrierTerm>(ws.affine_a[k],
                                                          ws.affine_b[k]));
    if (ws.linked)
      eng.add_barrier(PsdBarrierTerm::schur_link(ws.hx, ws.vx));
    else
      eng.add_barrier(PsdBarrierTerm::block_psd(ws.hx));

    EngineOptions eopt;
    eopt.gap_tol = opts.barrier_gap;
    eopt.newton_tol = opts.inner_tol;
    eopt.mu = opts.barrier_mu;
    eopt.t_init = warm_t;
    er = eng.minimize(z, eopt);
    if (er.termination == Termination::Infeasible)
      throw solver_error("solve_maxdet: interior point lost feasibility");
    warm_t = std::max(1.0, er.t_final / (eopt.mu * eopt.mu));

    sol.x = ws.hx.unpack(z);
    if (ws.linked) {
      sol.gamma = ws.vx.unpack(z);
      sol.penalty_residual = sol.x.trace().real() +
                             pb.link->anchor.squaredNorm() -
                             2.0 * pb.link->anchor.dot(sol.gamma).real();
    }
    sol.objective_bits = maxdet_objective_bits(pb, sol.x);
    sol.report.objective_trace.push_back(sol.objective_bits);
    ++sol.report.iterations;
    if (!enforce) break;
    const double h_scale = std::max(1.0, pb.link->anchor.squaredNorm());
    if (sol.penalty_residual <= 1e-9 * h_scale) break;
    rho *= 10.0;
  }

  sol.report.kkt_residual =
      er.t_final > 0.0 ? er.decrement / er.t_final : er.decrement;
  if (er.termination == Termination::MaxIters)
    sol.report.termination = Termination::MaxIters;
  else if (er.termination == Termination::NumericalTrouble)
    sol.report.termination = Termination::NumericalTrouble;
  for (std::size_t k = 0; k < ws.affine_a.size(); ++k)
    sol.report.constraint_residuals.push_back(
        (ws.affine_a[k].dot(z) - ws.affine_b[k]) / ws.affine_scale[k]);
  return sol;
}

// ---------------------------------------------------------------------------
// Concave objective over a complex vector with quadratic constraints
// ---------------------------------------------------------------------------

/// q^H a q - 2 Re{c^H q} + d <= 0 with `a` Hermitian PSD (a may be empty for
/// an affine constraint).
struct QuadConstraint {
  MatrixXcd a;
  VectorXcd c;
  double d = 0.0;
};

/// Concave objective callbacks; `gradient` is Wirtinger (df = 2Re{g^H dq}),
/// `hessian` (optional) returns the real Hessian in stacked [Re; Im]
/// coordinates.
struct ConcaveObjective {
  std::function<double(const VectorXcd&)> value;
  std::function<VectorXcd(const VectorXcd&)> gradient;
  std::function<MatrixXd(const VectorXcd&)> hessian;
};

struct QuadSolution {
  VectorXcd q;
  double objective = 0.0;
  SolveReport report;
};

namespace detail {

inline double quad_constraint_value(const QuadConstraint& qc,
                                    const VectorXcd& q) {
  double v = qc.d - 2.0 * qc.c.dot(q).real();
  if (qc.a.size() > 0) v += q.dot(qc.a * q).real();
  return v;
}

inline double quad_scale(const QuadConstraint& qc) {
  double s = std::abs(qc.d) + 2.0 * qc.c.norm();
  if (qc.a.size() > 0) s += qc.a.norm();
  return std::max(s, 1.0);
}

inline bool quad_phase1(int dim, const std::vector<QuadConstraint>& cons,
                        VectorXcd& q, const SolverOptions& opts) {
  const ComplexVecIndexer qx(0, dim);
  const int s_idx = 2 * dim;
  const int n_ext = 2 * dim + 1;
  double s0 = 0.0;
  std::vector<double> scales;
  scales.reserve(cons.size());
  for (const auto& qc : cons) {
    scales.push_back(quad_scale(qc));
    s0 = std::max(s0, quad_constraint_value(qc, q) / scales.back());
  }
  s0 += 1.0;
  VectorXd ze = VectorXd::Zero(n_ext);
  qx.pack(q, ze);
  ze[s_idx] = s0;

  BarrierEngine eng(n_ext);
  VectorXd obj = VectorXd::Zero(n_ext);
  obj[s_idx] = -1.0;
  eng.add_objective(std::make_shared<LinearObjTerm>(obj));
  for (std::size_t k = 0; k < cons.size(); ++k) {
    VectorXd lin = VectorXd::Zero(n_ext);
    lin[s_idx] = -scales[k];
    eng.add_barrier(std::make_shared<QuadBarrierTerm>(
        qx, cons[k].a, cons[k].c, cons[k].d, std::move(lin)));
  }
  VectorXd up = VectorXd::Zero(n_ext);
  up[s_idx] = 1.0;
  eng.add_barrier(std::make_shared<AffineBarrierTerm>(up, s0 + 1.0));

  EngineOptions eopt;
  eopt.gap_tol = 1e-6;
  eopt.newton_tol = 1e-10;
  eopt.mu = opts.barrier_mu;
  const EngineResult er = eng.minimize(ze, eopt);
  if (er.termination == Termination::Infeasible) return false;
  VectorXcd cand = qx.unpack(ze);
  for (std::size_t k = 0; k < cons.size(); ++k)
    if (quad_constraint_value(cons[k], cand) >= -1e-10 * scales[k])
      return false;
  q = cand;
  return true;
}

}  // namespace detail

inline QuadSolution solve_concave_quadratic(
    int dim, const ConcaveObjective& obj, std::vector<QuadConstraint> cons,
    double ball_radius2 = 0.0, const VectorXcd* warm = nullptr,
    const SolverOptions& opts = {}) {
  using namespace detail;  // NOLINT
  if (dim <= 0)
    throw dimension_error("solve_concave_quadratic: dim must be positive");
  if (ball_radius2 > 0.0) {
    QuadConstraint ball;
    ball.a = MatrixXcd::Identity(dim, dim);
    ball.c = VectorXcd::Zero(dim);
    ball.d = -ball_radius2;
    cons.push_back(std::move(ball));
  }
  for (const auto& qc : cons) {
    if (qc.a.size() > 0 && (qc.a.rows() != dim || qc.a.cols() != dim))
      throw dimension_error("solve_concave_quadratic: constraint dimension");
    if (static_cast<int>(qc.c.size()) != dim)
      throw dimension_error("solve_concave_quadratic: constraint dimension");
  }

  VectorXcd q = (warm != nullptr) ? *warm : VectorXcd::Zero(dim);
  bool strict = true;
  for (const auto& qc : cons)
    if (quad_constraint_value(qc, q) >= -1e-9 * quad_scale(qc)) {
      strict = false;
      break;
    }
  if (!strict && !quad_phase1(dim, cons, q, opts))
    throw solver_error(
        "solve_concave_quadratic: no strictly feasible point found");

  const ComplexVecIndexer qx(0, dim);
  BarrierEngine eng(2 * dim);
  eng.add_objective(std::make_shared<CallbackObjTerm>(
      qx, obj.value, obj.gradient, obj.hessian));
  for (auto& qc : cons)
    eng.add_barrier(
        std::make_shared<QuadBarrierTerm>(qx, qc.a, qc.c, qc.d));

  VectorXd z = VectorXd::Zero(2 * dim);
  qx.pack(q, z);
  EngineOptions eopt;
  eopt.gap_tol = opts.barrier_gap;
  eopt.newton_tol = opts.inner_tol;
  eopt.mu = opts.barrier_mu;
  const EngineResult er = eng.minimize(z, eopt);
  if (er.termination == Termination::Infeasible)
    throw solver_error("solve_concave_quadratic: lost feasibility");

  QuadSolution sol;
  sol.q = qx.unpack(z);
  sol.objective = obj.value(sol.q);
  sol.report.iterations = er.newton_steps;
  sol.report.kkt_residual =
      er.t_final > 0.0 ? er.decrement / er.t_final : er.decrement;
  sol.report.termination = er.termination == Termination::MaxIters
                               ? Termination::MaxIters
                               : (er.termination == Termination::NumericalTrouble
                                      ? Termination::NumericalTrouble
                                      : Termination::Converged);
  for (const auto& qc : cons)
    sol.report.constraint_residuals.push_back(
        quad_constraint_value(qc, sol.q) / quad_scale(qc));
  sol.report.objective_trace.push_back(sol.objective);
  return sol;
}

}  // namespace hmimo

#endif  // HMIMO_CONVEX_HPP
