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

#ifndef HMIMO_BARRIER_HPP
#define HMIMO_BARRIER_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "hmimo/common.hpp"
#include "hmimo/convex_types.hpp"

// Structured log-barrier Newton solver used by the convex front ends.
//
// A problem is a list of *terms* over a flat real variable vector z.  Complex
// matrix/vector unknowns are embedded through indexers:
//   - a Hermitian M x M unknown occupies M^2 reals (M diagonal entries, then
//     for each pair i<j the real and imaginary parts of the (i,j) entry);
//   - a complex M-vector occupies 2M reals (all real parts, then all
//     imaginary parts).
// Derivatives with respect to a packed coordinate are taken along elementary
// Hermitian directions E_a, each a sum of at most two rank-one components
// c * e_p e_q^H, which keeps every gradient/Hessian formula a short sum of
// matrix entries.

namespace hmimo::detail {

struct ElemComp {
  int p = 0;
  int q = 0;
  cxd c{0.0, 0.0};
};

/// Packs a Hermitian `dim x dim` unknown into `dim*dim` reals at `offset`.
class HermIndexer {
 public:
  HermIndexer() = default;
  HermIndexer(int offset, int dim) : offset_(offset), dim_(dim) {
    pairs_.reserve(static_cast<std::size_t>(dim) * (dim - 1) / 2);
    for (int i = 0; i < dim; ++i)
      for (int j = i + 1; j < dim; ++j) pairs_.emplace_back(i, j);
  }

  int offset() const { return offset_; }
  int dim() const { return dim_; }
  int size() const { return dim_ * dim_; }

  /// Number of rank-one components of the local direction (1 or 2).
  int components(int local, ElemComp out[2]) const {
    if (local < dim_) {
      out[0] = {local, local, cxd(1.0, 0.0)};
      return 1;
    }
    const int k = local - dim_;
    const auto [i, j] = pairs_[static_cast<std::size_t>(k >> 1)];
    if ((k & 1) == 0) {
      out[0] = {i, j, cxd(1.0, 0.0)};
      out[1] = {j, i, cxd(1.0, 0.0)};
    } else {
      out[0] = {i, j, cxd(0.0, 1.0)};
      out[1] = {j, i, cxd(0.0, -1.0)};
    }
    return 2;
  }

  MatrixXcd unpack(const VectorXd& z) const {
    MatrixXcd x(dim_, dim_);
    for (int i = 0; i < dim_; ++i) x(i, i) = z[offset_ + i];
    int base = offset_ + dim_;
    for (const auto& [i, j] : pairs_) {
      x(i, j) = cxd(z[base], z[base + 1]);
      x(j, i) = std::conj(x(i, j));
      base += 2;
    }
    return x;
  }

  void pack(const MatrixXcd& x, VectorXd& z) const {
    for (int i = 0; i < dim_; ++i) z[offset_ + i] = x(i, i).real();
    int base = offset_ + dim_;
    for (const auto& [i, j] : pairs_) {
      z[base] = x(i, j).real();
      z[base + 1] = x(i, j).imag();
      base += 2;
    }
  }

  /// Re tr(P E_local) for Hermitian (or general) P.
  double trace_inner(const MatrixXcd& p, int local) const {
    ElemComp comp[2];
    const int nc = components(local, comp);
    double acc = 0.0;
    for (int u = 0; u < nc; ++u)
      acc += (comp[u].c * p(comp[u].q, comp[u].p)).real();
    return acc;
  }

 private:
  int offset_ = 0;
  int dim_ = 0;
  std::vector<std::pair<int, int>> pairs_;
};

/// Packs a complex `dim`-vector as [Re q; Im q] at `offset`.
class ComplexVecIndexer {
 public:
  ComplexVecIndexer() = default;
  ComplexVecIndexer(int offset, int dim) : offset_(offset), dim_(dim) {}

  int offset() const { return offset_; }
  int dim() const { return dim_; }
  int size() const { return 2 * dim_; }
  int re_index(int i) const { return offset_ + i; }
  int im_index(int i) const { return offset_ + dim_ + i; }

  VectorXcd unpack(const VectorXd& z) const {
    VectorXcd q(dim_);
    for (int i = 0; i < dim_; ++i)
      q[i] = cxd(z[re_index(i)], z[im_index(i)]);
    return q;
  }

  void pack(const VectorXcd& q, VectorXd& z) const {
    for (int i = 0; i < dim_; ++i) {
      z[re_index(i)] = q[i].real();
      z[im_index(i)] = q[i].imag();
    }
  }

  /// Real-coordinate gradient of f with Wirtinger gradient g: df = 2Re{g^H dq}.
  void add_wirtinger(const VectorXcd& g, double coef, VectorXd& out) const {
    for (int i = 0; i < dim_; ++i) {
      out[re_index(i)] += coef * 2.0 * g[i].real();
      out[im_index(i)] += coef * 2.0 * g[i].imag();
    }
  }

 private:
  int offset_ = 0;
  int dim_ = 0;
};

/// [[Re A, -Im A], [Im A, Re A]]: the symmetric real form with
/// q^H A q = z^T R(A) z for Hermitian A under the [Re; Im] packing.
inline MatrixXd real_quadratic_form(const MatrixXcd& a) {
  const int m = static_cast<int>(a.rows());
  MatrixXd r(2 * m, 2 * m);
  r.topLeftCorner(m, m) = a.real();
  r.bottomRightCorner(m, m) = a.real();
  r.topRightCorner(m, m) = -a.imag();
  r.bottomLeftCorner(m, m) = a.imag();
  return r;
}

// ---------------------------------------------------------------------------
// Term interface
// ---------------------------------------------------------------------------

class Term {
 public:
  virtual ~Term() = default;
  /// Refresh value-level caches at z; false when z is outside the domain.
  virtual bool prepare(const VectorXd& z) = 0;
  /// Refresh derivative caches; called only on accepted points.
  virtual void prepare_derivatives() {}
  virtual double value() const = 0;
  virtual void add_gradient(double coef, VectorXd& g) const = 0;
  virtual void add_hessian(double coef, MatrixXd& h) const = 0;
  /// Self-concordance parameter; 0 for objective terms.
  virtual double barrier_nu() const { return 0.0; }
};

/// ln det(I + sum_m w_m R_m X R_m^H) over a Hermitian block X (natural log).
class LogDetCapTerm final : public Term {
 public:
  LogDetCapTerm(HermIndexer idx, std::vector<double> weights,
                std::vector<MatrixXcd> maps)
      : idx_(std::move(idx)), w_(std::move(weights)), r_(std::move(maps)) {
    rows_ = r_.empty() ? 0 : static_cast<int>(r_[0].rows());
    for (const auto& m : r_)
      if (static_cast<int>(m.cols()) != idx_.dim() ||
          static_cast<int>(m.rows()) != rows_)
        throw dimension_error("log-det term maps must share shape N x M");
    if (w_.size() != r_.size())
      throw dimension_error("log-det term needs one weight per map");
  }

  bool prepare(const VectorXd& z) override {
    if (rows_ == 0) {
      val_ = 0.0;
      return true;
    }
    const MatrixXcd x = idx_.unpack(z);
    MatrixXcd w = MatrixXcd::Identity(rows_, rows_);
    for (std::size_t m = 0; m < r_.size(); ++m) {
      const MatrixXcd rx = r_[m] * x;
      w.noalias() += w_[m] * rx * r_[m].adjoint();
    }
    w = 0.5 * (w + w.adjoint()).eval();
    llt_.compute(w);
    if (llt_.info() != Eigen::Success) return false;
    val_ = 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().real().log().sum();
    return std::isfinite(val_);
  }

  void prepare_derivatives() override {
    if (rows_ == 0) return;
    const int nl = idx_.size();
    const int m = idx_.dim();
    p_.setZero(m, m);
    std::vector<MatrixXcd> rt(r_.size());
    for (std::size_t k = 0; k < r_.size(); ++k) {
      rt[k] = llt_.matrixL().solve(r_[k]);
      p_.noalias() += w_[k] * rt[k].adjoint() * rt[k];
    }
    // y_row(a) = vec of Y_a = sum_k w_k Rt_k E_a Rt_k^H, so that the
    // objective Hessian is -Y Y^T (trace inner products become real dots).
    ymat_.resize(nl, 2 * rows_ * rows_);
    MatrixXcd acc(rows_, rows_);
    ElemComp comp[2];
    for (int a = 0; a < nl; ++a) {
      acc.setZero();
      const int nc = idx_.components(a, comp);
      for (std::size_t k = 0; k < r_.size(); ++k)
        for (int u = 0; u < nc; ++u)
          acc.noalias() += (w_[k] * comp[u].c) * rt[k].col(comp[u].p) *
                           rt[k].col(comp[u].q).adjoint();
      for (int c = 0; c < rows_; ++c)
        for (int rr = 0; rr < rows_; ++rr) {
          ymat_(a, c * rows_ + rr) = acc(rr, c).real();
          ymat_(a, rows_ * rows_ + c * rows_ + rr) = acc(rr, c).imag();
        }
    }
  }

  double value() const override { return val_; }

  void add_gradient(double coef, VectorXd& g) const override {
    if (rows_ == 0) return;
    for (int a = 0; a < idx_.size(); ++a)
      g[idx_.offset() + a] += coef * idx_.trace_inner(p_, a);
  }

  void add_hessian(double coef, MatrixXd& h) const override {
    if (rows_ == 0) return;
    const int nl = idx_.size();
    h.block(idx_.offset(), idx_.offset(), nl, nl).noalias() -=
        coef * (ymat_ * ymat_.transpose());
  }

 private:
  HermIndexer idx_;
  std::vector<double> w_;
  std::vector<MatrixXcd> r_;
  int rows_ = 0;
  Eigen::LLT<MatrixXcd> llt_;
  double val_ = 0.0;
  MatrixXcd p_;
  MatrixXd ymat_;
};

/// -ln det S(z) for an affine Hermitian S(z) = S0 + sum_a z_a A_a.
class PsdBarrierTerm final : public Term {
 public:
  struct Dir {
    int var = 0;
    ElemComp comp[2];
    int ncomp = 0;
  };

  PsdBarrierTerm(MatrixXcd s0, std::vector<Dir> dirs)
      : s0_(std::move(s0)), dirs_(std::move(dirs)) {
    dim_ = static_cast<int>(s0_.rows());
  }

  /// S = the Hermitian block itself (X >= 0).
  static std::shared_ptr<PsdBarrierTerm> block_psd(const HermIndexer& idx) {
    std::vector<Dir> dirs(static_cast<std::size_t>(idx.size()));
    for (int a = 0; a < idx.size(); ++a) {
      dirs[a].var = idx.offset() + a;
      dirs[a].ncomp = idx.components(a, dirs[a].comp);
    }
    return std::make_shared<PsdBarrierTerm>(
        MatrixXcd::Zero(idx.dim(), idx.dim()), std::move(dirs));
  }

  /// S = [[X, v], [v^H, 1]] >= 0, the Schur-complement link between a
  /// Hermitian block X and a complex vector v of matching dimension.
  static std::shared_ptr<PsdBarrierTerm> schur_link(
      const HermIndexer& hx, const ComplexVecIndexer& vx) {
    const int m = hx.dim();
    std::vector<Dir> dirs;
    dirs.reserve(static_cast<std::size_t>(hx.size() + vx.size()));
    for (int a = 0; a < hx.size(); ++a) {
      Dir d;
      d.var = hx.offset() + a;
      d.ncomp = hx.components(a, d.comp);
      dirs.push_back(d);
    }
    for (int i = 0; i < m; ++i) {
      Dir re;
      re.var = vx.re_index(i);
      re.comp[0] = {i, m, cxd(1.0, 0.0)};
      re.comp[1] = {m, i, cxd(1.0, 0.0)};
      re.ncomp = 2;
      dirs.push_back(re);
      Dir im;
      im.var = vx.im_index(i);
      im.comp[0] = {i, m, cxd(0.0, 1.0)};
      im.comp[1] = {m, i, cxd(0.0, -1.0)};
      im.ncomp = 2;
      dirs.push_back(im);
    }
    MatrixXcd s0 = MatrixXcd::Zero(m + 1, m + 1);
    s0(m, m) = 1.0;
    return std::make_shared<PsdBarrierTerm>(std::move(s0), std::move(dirs));
  }

  bool prepare(const VectorXd& z) override {
    MatrixXcd s = s0_;
    for (const auto& d : dirs_)
      for (int u = 0; u < d.ncomp; ++u)
        s(d.comp[u].p, d.comp[u].q) += z[d.var] * d.comp[u].c;
    llt_.compute(s);
    if (llt_.info() != Eigen::Success) return false;
    val_ = -2.0 *
           llt_.matrixL().toDenseMatrix().diagonal().array().real().log().sum();
    return std::isfinite(val_);
  }

  void prepare_derivatives() override {
    sinv_ = llt_.solve(MatrixXcd::Identity(dim_, dim_));
  }

  double value() const override { return val_; }

  void add_gradient(double coef, VectorXd& g) const override {
    for (const auto& d : dirs_) {
      double acc = 0.0;
      for (int u = 0; u < d.ncomp; ++u)
        acc += (d.comp[u].c * sinv_(d.comp[u].q, d.comp[u].p)).real();
      g[d.var] -= coef * acc;
    }
  }

  void add_hessian(double coef, MatrixXd& h) const override {
    const std::size_t nd = dirs_.size();
    for (std::size_t a = 0; a < nd; ++a) {
      const auto& da = dirs_[a];
      for (std::size_t b = a; b < nd; ++b) {
        const auto& db = dirs_[b];
        double acc = 0.0;
        for (int u = 0; u < da.ncomp; ++u)
          for (int v = 0; v < db.ncomp; ++v)
            acc += (da.comp[u].c * db.comp[v].c *
                    sinv_(da.comp[u].q, db.comp[v].p) *
                    sinv_(db.comp[v].q, da.comp[u].p))
                       .real();
        h(da.var, db.var) += coef * acc;
        if (a != b) h(db.var, da.var) += coef * acc;
      }
    }
  }

  double barrier_nu() const override { return dim_; }

 private:
  MatrixXcd s0_;
  std::vector<Dir> dirs_;
  int dim_ = 0;
  Eigen::LLT<MatrixXcd> llt_;
  MatrixXcd sinv_;
  double val_ = 0.0;
};

/// -ln(b - a^T z).
class AffineBarrierTerm final : public Term {
 public:
  AffineBarrierTerm(VectorXd a, double b) : a_(std::move(a)), b_(b) {}

  bool prepare(const VectorXd& z) override {
    slack_ = b_ - a_.dot(z);
    return slack_ > 0.0 && std::isfinite(slack_);
  }

  double value() const override { return -std::log(slack_); }

  void add_gradient(double coef, VectorXd& g) const override {
    g += (coef / slack_) * a_;
  }

  void add_hessian(double coef, MatrixXd& h) const override {
    h.noalias() += (coef / (slack_ * slack_)) * (a_ * a_.transpose());
  }

  double barrier_nu() const override { return 1.0; }

  double slack() const { return slack_; }
  const VectorXd& coeffs() const { return a_; }
  double bound() const { return b_; }

 private:
  VectorXd a_;
  double b_ = 0.0;
  double slack_ = 0.0;
};

/// -ln(-g(z)) with g(z) = q^H A q - 2 Re{c^H q} + d + l^T z, where q is the
/// complex vector carried by the indexer and l is an optional dense linear
/// part over the full variable vector (used for phase-1 slacks).
class QuadBarrierTerm final : public Term {
 public:
  QuadBarrierTerm(ComplexVecIndexer idx, MatrixXcd a, VectorXcd c, double d,
                  VectorXd linear = VectorXd())
      : idx_(std::move(idx)),
        a_(std::move(a)),
        c_(std::move(c)),
        d_(d),
        linear_(std::move(linear)) {
    has_quad_ = a_.size() > 0 && a_.cwiseAbs().maxCoeff() > 0.0;
    if (has_quad_) ra_ = real_quadratic_form(a_);
  }

  bool prepare(const VectorXd& z) override {
    q_ = idx_.unpack(z);
    VectorXcd aq = has_quad_ ? VectorXcd(a_ * q_) : VectorXcd::Zero(idx_.dim());
    double g = d_ - 2.0 * c_.dot(q_).real();
    if (has_quad_) g += q_.dot(aq).real();
    if (linear_.size() > 0) g += linear_.dot(z);
    slack_ = -g;
    grad_q_ = aq - c_;
    return slack_ > 0.0 && std::isfinite(slack_);
  }

  double value() const override { return -std::log(slack_); }

  void add_gradient(double coef, VectorXd& g) const override {
    idx_.add_wirtinger(grad_q_, coef / slack_, g);
    if (linear_.size() > 0) g += (coef / slack_) * linear_;
  }

  void add_hessian(double coef, MatrixXd& h) const override {
    VectorXd v = VectorXd::Zero(h.rows());
    idx_.add_wirtinger(grad_q_, 1.0, v);
    if (linear_.size() > 0) v += linear_;
    h.noalias() += (coef / (slack_ * slack_)) * (v * v.transpose());
    if (has_quad_) {
      const int n2 = idx_.size();
      h.block(idx_.offset(), idx_.offset(), n2, n2) +=
          (2.0 * coef / slack_) * ra_;
    }
  }

  double barrier_nu() const override { return 1.0; }

  double slack() const { return slack_; }

 private:
  ComplexVecIndexer idx_;
  MatrixXcd a_;
  VectorXcd c_;
  double d_ = 0.0;
  VectorXd linear_;
  bool has_quad_ = false;
  MatrixXd ra_;
  VectorXcd q_;
  VectorXcd grad_q_;
  double slack_ = 0.0;
};

/// l^T z + c0 as an objective piece.
class LinearObjTerm final : public Term {
 public:
  explicit LinearObjTerm(VectorXd l, double c0 = 0.0)
      : l_(std::move(l)), c0_(c0) {}

  bool prepare(const VectorXd& z) override {
    val_ = l_.dot(z) + c0_;
    return std::isfinite(val_);
  }
  double value() const override { return val_; }
  void add_gradient(double coef, VectorXd& g) const override {
    g += coef * l_;
  }
  void add_hessian(double, MatrixXd&) const override {}

 private:
  VectorXd l_;
  double c0_ = 0.0;
  double val_ = 0.0;
};

/// Concave objective supplied as callbacks over the complex vector unknown.
/// The gradient is Wirtinger (df = 2 Re{g^H dq}); the Hessian callback, when
/// present, returns the 2M x 2M real Hessian in [Re; Im] coordinates, and is
/// otherwise approximated by central differences of the gradient.
class CallbackObjTerm final : public Term {
 public:
  using ValueFn = std::function<double(const VectorXcd&)>;
  using GradFn = std::function<VectorXcd(const VectorXcd&)>;
  using HessFn = std::function<MatrixXd(const VectorXcd&)>;

  CallbackObjTerm(ComplexVecIndexer idx, ValueFn value, GradFn grad,
                  HessFn hess = nullptr)
      : idx_(std::move(idx)),
        value_(std::move(value)),
        grad_(std::move(grad)),
        hess_(std::move(hess)) {}

  bool prepare(const VectorXd& z) override {
    q_ = idx_.unpack(z);
    val_ = value_(q_);
    return std::isfinite(val_);
  }

  void prepare_derivatives() override {
    g_ = grad_(q_);
    if (hess_) {
      h_ = hess_(q_);
      return;
    }
    const int m = idx_.dim();
    const double step = 1e-6 * std::max(1.0, q_.norm());
    h_.resize(2 * m, 2 * m);
    for (int k = 0; k < 2 * m; ++k) {
      VectorXcd hi = q_, lo = q_;
      const int i = k % m;
      const cxd delta = (k < m) ? cxd(step, 0.0) : cxd(0.0, step);
      hi[i] += delta;
      lo[i] -= delta;
      const VectorXcd gh = grad_(hi), gl = grad_(lo);
      for (int j = 0; j < m; ++j) {
        h_(j, k) = (gh[j].real() - gl[j].real()) / step;
        h_(m + j, k) = (gh[j].imag() - gl[j].imag()) / step;
      }
    }
    h_ = 0.5 * (h_ + h_.transpose()).eval();
  }

  double value() const override { return val_; }

  void add_gradient(double coef, VectorXd& g) const override {
    idx_.add_wirtinger(g_, coef, g);
  }

  void add_hessian(double coef, MatrixXd& h) const override {
    const int n2 = idx_.size();
    h.block(idx_.offset(), idx_.offset(), n2, n2) += coef * h_;
  }

 private:
  ComplexVecIndexer idx_;
  ValueFn value_;
  GradFn grad_;
  HessFn hess_;
  VectorXcd q_;
  double val_ = 0.0;
  VectorXcd g_;
  MatrixXd h_;
};

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

struct EngineOptions {
  double gap_tol = 1e-10;    // nu_total / t target, natural-log units
  double newton_tol = 1e-11; // stop a stage once decrement^2/2 drops below
  double mu = 20.0;
  int max_newton_per_stage = 250;
  int max_stages = 60;
  double t_init = 0.0;  // <= 0 selects automatically
};

struct EngineResult {
  Termination termination = Termination::Converged;
  double gap = 0.0;
  double decrement = 0.0;
  double t_final = 0.0;
  int newton_steps = 0;
};

class BarrierEngine {
 public:
  explicit BarrierEngine(int n) : n_(n) {}

  int dim() const { return n_; }

  void add_objective(std::shared_ptr<Term> t) {
    objectives_.push_back(std::move(t));
  }
  void add_barrier(std::shared_ptr<Term> t) {
    barriers_.push_back(std::move(t));
  }

  double total_nu() const {
    double nu = 0.0;
    for (const auto& b : barriers_) nu += b->barrier_nu();
    return nu;
  }

  bool prepare_all(const VectorXd& z) {
    for (auto& t : objectives_)
      if (!t->prepare(z)) return false;
    for (auto& t : barriers_)
      if (!t->prepare(z)) return false;
    return true;
  }

  double objective_value() const {
    double f = 0.0;
    for (const auto& t : objectives_) f += t->value();
    return f;
  }

  double merit(double t) const {
    double phi = -t * objective_value();
    for (const auto& b : barriers_) phi += b->value();
    return phi;
  }

  /// Minimizes -t f(z) + barrier(z) along the central path.  `z` must be
  /// strictly feasible on entry and carries the final iterate on exit.
  EngineResult minimize(VectorXd& z, const EngineOptions& opt) {
    EngineResult res;
    if (!prepare_all(z)) {
      res.termination = Termination::Infeasible;
      return res;
    }
    const double nu = std::max(total_nu(), 1.0);
    double t = opt.t_init > 0.0
                   ? opt.t_init
                   : std::max(1.0, nu / (10.0 * std::max(1.0, std::abs(objective_value()))));
    VectorXd g(n_), step(n_);
    MatrixXd h(n_, n_);
    int stalls = 0;
    for (int stage = 0; stage < opt.max_stages; ++stage) {
      bool stage_stalled = false;
      // Intermediate stages only need to stay well inside the quadratic
      // convergence zone; full accuracy is reserved for the final stage.
      const bool final_stage = nu / t <= opt.gap_tol;
      const double stage_tol =
          final_stage ? opt.newton_tol : std::max(opt.newton_tol, 1e-9);
      for (int it = 0; it < opt.max_newton_per_stage; ++it) {
        ++res.newton_steps;
        for (auto& term : objectives_) term->prepare_derivatives();
        for (auto& term : barriers_) term->prepare_derivatives();
        g.setZero();
        h.setZero();
        for (const auto& term : objectives_) {
          term->add_gradient(-t, g);
          term->add_hessian(-t, h);
        }
        for (const auto& term : barriers_) {
          term->add_gradient(1.0, g);
          term->add_hessian(1.0, h);
        }
        double dec2 = -1.0;
        double ridge = 0.0;
        const double diag_scale =
            std::max(h.diagonal().cwiseAbs().maxCoeff(), 1.0);
        for (int attempt = 0; attempt < 6; ++attempt) {
          MatrixXd hr = h;
          if (ridge > 0.0)
            hr.diagonal().array() += ridge * diag_scale;
          Eigen::LDLT<MatrixXd> ldlt(hr);
          step = -ldlt.solve(g);
          dec2 = -g.dot(step);
          if (std::isfinite(dec2) && dec2 >= 0.0 && step.allFinite()) break;
          ridge = (ridge == 0.0) ? 1e-12 : ridge * 100.0;
        }
        if (!(dec2 >= 0.0) || !step.allFinite()) {
          res.termination = Termination::NumericalTrouble;
          res.t_final = t;
          return res;
        }
        res.decrement = std::sqrt(std::max(dec2, 0.0));
        if (0.5 * dec2 <= stage_tol) break;
        // Backtracking line search: stay in the domain, require an Armijo
        // decrease of the barrier merit.
        const double phi0 = merit(t);
        double alpha = 1.0;
        bool moved = false;
        VectorXd trial(n_);
        for (int ls = 0; ls < 60; ++ls) {
          trial = z + alpha * step;
          if (prepare_all(trial) &&
              merit(t) <= phi0 - 0.25 * alpha * dec2) {
            z = trial;
            moved = true;
            break;
          }
          alpha *= 0.5;
        }
        if (!moved) {
          prepare_all(z);  // restore caches at the accepted point
          stage_stalled = true;
          break;
        }
      }
      res.gap = nu / t;
      res.t_final = t;
      // The duality-gap bound nu/t certifies the iterate only when Newton
      // actually centered it.  A stalled line search may leave the iterate far
      // from the central path, where the bound says nothing; accept a stalled
      // stage as converged only when the decrement is already within a modest
      // factor of the stage target (a floating-point-limited finish).
      const bool centered =
          !stage_stalled ||
          0.5 * res.decrement * res.decrement <= 1e3 * stage_tol;
      if (res.gap <= opt.gap_tol) {
        res.termination =
            centered ? Termination::Converged : Termination::NumericalTrouble;
        return res;
      }
      if (stage_stalled && ++stalls >= 3) {
        res.termination = (res.gap <= 1e3 * opt.gap_tol && centered)
                              ? Termination::Converged
                              : Termination::NumericalTrouble;
        return res;
      }
      t *= opt.mu;
    }
    res.termination = Termination::MaxIters;
    return res;
  }

  const std::vector<std::shared_ptr<Term>>& barriers() const {
    return barriers_;
  }

 private:
  int n_ = 0;
  std::vector<std::shared_ptr<Term>> objectives_;
  std::vector<std::shared_ptr<Term>> barriers_;
};

}  // namespace hmimo::detail

#endif  // HMIMO_BARRIER_HPP
